#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cctype>
#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <queue>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "l2hodge/complex.hpp"
#include "l2hodge/errors.hpp"
#include "l2hodge/module.hpp"

namespace l2hodge::flatcw {

using hcx::ChainMap;
using hcx::HilbertComplex;
using hmod::HilbertModule;
using hmod::ModuleMorphism;
using vna::Matrix;
using vna::VnAlgebra;

inline constexpr double kDefaultRelationTol = 1e-10;

// ---------------------------------------------------------------------------
// Group words
// ---------------------------------------------------------------------------

struct Letter {
    std::string gen;
    int exp = 1;

    bool operator==(const Letter&) const = default;
};

using Word = std::vector<Letter>;

/// Parse "a b^-1 c^3" into letters; the empty string is the identity.
inline Word parse_word(const std::string& text) {
    Word w;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (i >= text.size()) break;
        std::size_t j = i;
        while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j])) &&
               text[j] != '^')
            ++j;
        Letter l;
        l.gen = text.substr(i, j - i);
        if (l.gen.empty()) throw Error(errc::parse_error, "empty generator name in word '" + text + "'");
        i = j;
        if (i < text.size() && text[i] == '^') {
            ++i;
            std::size_t k = i;
            if (k < text.size() && (text[k] == '-' || text[k] == '+')) ++k;
            std::size_t digits_from = k;
            while (k < text.size() && std::isdigit(static_cast<unsigned char>(text[k]))) ++k;
            if (k == digits_from)
                throw Error(errc::parse_error, "bad exponent in word '" + text + "'");
            l.exp = std::stoi(text.substr(i, k - i));
            i = k;
        }
        if (l.exp != 0) w.push_back(l);
    }
    return w;
}

inline std::string word_to_string(const Word& w) {
    std::string s;
    for (const auto& l : w) {
        if (!s.empty()) s += ' ';
        s += l.gen;
        if (l.exp != 1) s += "^" + std::to_string(l.exp);
    }
    return s;
}

/// Concatenate with free reduction of adjacent letters.
inline Word concat_words(Word a, const Word& b) {
    for (const auto& l : b) {
        if (!a.empty() && a.back().gen == l.gen) {
            a.back().exp += l.exp;
            if (a.back().exp == 0) a.pop_back();
        } else {
            a.push_back(l);
        }
    }
    return a;
}

inline Word inverse_word(const Word& w) {
    Word r;
    r.reserve(w.size());
    for (auto it = w.rbegin(); it != w.rend(); ++it) r.push_back({it->gen, -it->exp});
    return r;
}

// ---------------------------------------------------------------------------
// Group specifications and flat bundles
// ---------------------------------------------------------------------------

struct GroupSpec {
    enum class Kind { finite_cyclic, commuting, finite_presented };
    Kind kind = Kind::commuting;
    int order = 0;                       // finite_cyclic only
    std::vector<std::string> generators;
    std::vector<std::string> relations;  // finite_presented: relator words

    static GroupSpec finite_cyclic(int n, std::string gen = "x") {
        if (n < 1) throw Error(errc::invalid_argument, "cyclic group order must be >= 1");
        GroupSpec g;
        g.kind = Kind::finite_cyclic;
        g.order = n;
        g.generators = {std::move(gen)};
        return g;
    }

    static GroupSpec commuting(std::vector<std::string> gens) {
        GroupSpec g;
        g.kind = Kind::commuting;
        g.generators = std::move(gens);
        return g;
    }

    static GroupSpec finite_presented(std::vector<std::string> gens,
                                      std::vector<std::string> relations) {
        GroupSpec g;
        g.kind = Kind::finite_presented;
        g.generators = std::move(gens);
        g.relations = std::move(relations);
        return g;
    }

    bool has_generator(const std::string& name) const {
        return std::find(generators.begin(), generators.end(), name) != generators.end();
    }
};

/// Canonical form of a word in the given group, where one exists: exponent
/// mod n for a cyclic group, sorted exponent vector for commuting generators,
/// plain free reduction otherwise.
inline Word normalize_word(const GroupSpec& g, const Word& w) {
    for (const auto& l : w)
        if (!g.has_generator(l.gen))
            throw Error(errc::unknown_group_element, "unknown generator '" + l.gen + "'");
    switch (g.kind) {
        case GroupSpec::Kind::finite_cyclic: {
            long e = 0;
            for (const auto& l : w) e += l.exp;
            e %= g.order;
            if (e < 0) e += g.order;
            if (e == 0) return {};
            return {Letter{g.generators.front(), static_cast<int>(e)}};
        }
        case GroupSpec::Kind::commuting: {
            std::map<std::string, long> exps;
            for (const auto& l : w) exps[l.gen] += l.exp;
            Word r;
            for (const auto& gen : g.generators) {
                auto it = exps.find(gen);
                if (it != exps.end() && it->second != 0)
                    r.push_back({gen, static_cast<int>(it->second)});
            }
            return r;
        }
        case GroupSpec::Kind::finite_presented:
            return concat_words({}, w);  // free reduction only
    }
    return w;
}

/// A flat bundle: a fiber module M with an action of the group by invertible
/// A-linear maps. Words act contravariantly, R(uv) = R(v) R(u), matching the
/// deck-transformation convention used by the cell complexes below.
struct FlatBundle {
    GroupSpec group;
    HilbertModule fiber;
    std::map<std::string, ModuleMorphism> images;
    std::map<std::string, ModuleMorphism> inverse_images;

    static FlatBundle make(GroupSpec group, HilbertModule fiber,
                           std::map<std::string, ModuleMorphism> images,
                           double relation_tol = kDefaultRelationTol) {
        FlatBundle b;
        b.group = std::move(group);
        b.fiber = std::move(fiber);
        b.images = std::move(images);
        for (const auto& gen : b.group.generators) {
            auto it = b.images.find(gen);
            if (it == b.images.end())
                throw Error(errc::invalid_argument, "no monodromy given for generator '" + gen + "'");
            if (!it->second.domain.same_as(b.fiber) || !it->second.codomain.same_as(b.fiber))
                throw Error(errc::shape_mismatch,
                            "monodromy of '" + gen + "' is not an endomorphism of the fiber");
            b.inverse_images.emplace(gen, hcx::invert_morphism(it->second));
        }
        for (const auto& [name, img] : b.images)
            if (!b.group.has_generator(name))
                throw Error(errc::unknown_group_element,
                            "monodromy given for unknown generator '" + name + "'");
        b.check_relations(relation_tol);
        return b;
    }

    ModuleMorphism generator_power(const std::string& gen, int exp) const {
        const auto& table = exp >= 0 ? images : inverse_images;
        auto it = table.find(gen);
        if (it == table.end())
            throw Error(errc::unknown_group_element, "unknown generator '" + gen + "'");
        ModuleMorphism acc = hmod::identity_morphism(fiber);
        for (int i = 0; i < std::abs(exp); ++i) acc = compose(it->second, acc);
        return acc;
    }

    /// R(l_1 l_2 ... l_k) = R(l_k) ... R(l_2) R(l_1).
    ModuleMorphism evaluate(const Word& w) const {
        ModuleMorphism acc = hmod::identity_morphism(fiber);
        for (const auto& l : w) acc = compose(generator_power(l.gen, l.exp), acc);
        return acc;
    }

    ModuleMorphism evaluate(const std::string& word) const { return evaluate(parse_word(word)); }

    void check_relations(double tol) const {
        auto residual = [&](const ModuleMorphism& lhs, const ModuleMorphism& rhs, double scale,
                            const std::string& what) {
            double r = hmod::operator_norm(add_morphisms(lhs, scale_morphism(-1.0, rhs)));
            if (r > tol * (1.0 + scale))
                throw Error(errc::relation_violated,
                            what + " violated with residual " + std::to_string(r));
        };
        switch (group.kind) {
            case GroupSpec::Kind::finite_cyclic: {
                const std::string& g = group.generators.front();
                ModuleMorphism p = generator_power(g, group.order);
                double n = hmod::operator_norm(images.at(g));
                residual(p, hmod::identity_morphism(fiber), std::pow(n, group.order),
                         "relation " + g + "^" + std::to_string(group.order) + " = 1");
                break;
            }
            case GroupSpec::Kind::commuting: {
                for (std::size_t i = 0; i < group.generators.size(); ++i)
                    for (std::size_t j = i + 1; j < group.generators.size(); ++j) {
                        const auto& a = images.at(group.generators[i]);
                        const auto& b = images.at(group.generators[j]);
                        residual(compose(a, b), compose(b, a),
                                 hmod::operator_norm(a) * hmod::operator_norm(b),
                                 "commutation of " + group.generators[i] + ", " +
                                     group.generators[j]);
                    }
                break;
            }
            case GroupSpec::Kind::finite_presented: {
                for (const auto& rel : group.relations) {
                    Word w = parse_word(rel);
                    double scale = 1.0;
                    for (const auto& l : w)
                        scale *= std::pow(std::max(1.0, hmod::operator_norm(images.at(l.gen))),
                                          std::abs(l.exp));
                    residual(evaluate(w), hmod::identity_morphism(fiber), scale,
                             "relator '" + rel + "'");
                }
                break;
            }
        }
    }
};

// ---------------------------------------------------------------------------
// Combinatorial CW complexes with equivariant boundary data
// ---------------------------------------------------------------------------

/// One term of an equivariant boundary: coeff * (word . cell-lift).
struct BoundaryTerm {
    std::string cell;
    std::string word;
    int coeff = 0;
};

/// A finite CW complex with a chosen lift of each cell to the universal
/// cover. boundary[c] expresses the boundary of the chosen lift of c in the
/// lifted basis; for 2-cells, words[c] optionally records the attaching loop
/// as an ordered sequence of steps "e" / "e^-1", which subdivision needs.
struct CwComplexData {
    std::vector<std::vector<std::string>> cells;  // by dimension
    std::map<std::string, std::vector<BoundaryTerm>> boundary;
    std::map<std::string, std::vector<std::string>> words;

    int dim() const { return static_cast<int>(cells.size()) - 1; }
};

inline void validate_cw(const CwComplexData& cw) {
    if (cw.cells.empty() || cw.cells.front().empty())
        throw Error(errc::invalid_argument, "complex needs at least one vertex");
    std::set<std::string> ids;
    for (const auto& dim : cw.cells)
        for (const auto& id : dim) {
            if (id.empty()) throw Error(errc::invalid_argument, "empty cell id");
            if (!ids.insert(id).second)
                throw Error(errc::invalid_argument, "duplicate cell id '" + id + "'");
        }
    for (std::size_t p = 1; p < cw.cells.size(); ++p) {
        std::set<std::string> below(cw.cells[p - 1].begin(), cw.cells[p - 1].end());
        for (const auto& id : cw.cells[p]) {
            auto it = cw.boundary.find(id);
            if (it == cw.boundary.end())
                throw Error(errc::invalid_argument, "cell '" + id + "' has no boundary data");
            for (const auto& t : it->second) {
                if (!below.count(t.cell))
                    throw Error(errc::invalid_argument,
                                "boundary of '" + id + "' references '" + t.cell +
                                    "' which is not one dimension lower");
                if (t.coeff == 0)
                    throw Error(errc::invalid_argument,
                                "boundary of '" + id + "' has a zero coefficient");
                parse_word(t.word);
            }
            if (p == 1) {
                int plus = 0, minus = 0;
                for (const auto& t : it->second) {
                    if (t.coeff == 1) ++plus;
                    else if (t.coeff == -1) ++minus;
                    else
                        throw Error(errc::invalid_argument,
                                    "edge '" + id + "' must have coefficients +1 and -1");
                }
                if (plus != 1 || minus != 1)
                    throw Error(errc::invalid_argument,
                                "edge '" + id + "' must have exactly one head and one tail term");
            }
        }
    }
    for (const auto& [id, _] : cw.boundary)
        if (!ids.count(id)) throw Error(errc::invalid_argument, "boundary for unknown cell '" + id + "'");
    std::set<std::string> edge_ids;
    if (cw.cells.size() > 1) edge_ids.insert(cw.cells[1].begin(), cw.cells[1].end());
    for (const auto& [id, steps] : cw.words) {
        if (!ids.count(id)) throw Error(errc::invalid_argument, "word for unknown cell '" + id + "'");
        for (const auto& s : steps) {
            Word w = parse_word(s);
            if (w.size() != 1 || std::abs(w.front().exp) != 1 || !edge_ids.count(w.front().gen))
                throw Error(errc::invalid_argument,
                            "word step '" + s + "' of cell '" + id +
                                "' must be a single edge or its inverse");
        }
    }
}

/// Head/tail of an edge lift: the boundary reads head_word . head - tail_word . tail.
struct EdgeEnds {
    std::string tail, head;
    Word tail_word, head_word;
};

inline EdgeEnds edge_ends(const CwComplexData& cw, const std::string& edge) {
    auto it = cw.boundary.find(edge);
    if (it == cw.boundary.end())
        throw Error(errc::invalid_argument, "edge '" + edge + "' has no boundary data");
    EdgeEnds e;
    bool have_head = false, have_tail = false;
    for (const auto& t : it->second) {
        if (t.coeff == 1) {
            e.head = t.cell;
            e.head_word = parse_word(t.word);
            have_head = true;
        } else if (t.coeff == -1) {
            e.tail = t.cell;
            e.tail_word = parse_word(t.word);
            have_tail = true;
        }
    }
    if (!have_head || !have_tail)
        throw Error(errc::invalid_argument, "edge '" + edge + "' lacks a head or tail term");
    return e;
}

// ---------------------------------------------------------------------------
// Assembly of the twisted cochain complex
// ---------------------------------------------------------------------------

struct AssembledComplex {
    HilbertComplex complex;
    std::vector<std::vector<std::string>> cells;  // row/column layout per degree
};

/// C^p = M^{# p-cells}; the coboundary block from p-cell tau to (p+1)-cell
/// sigma is sum over boundary terms (tau, gamma, c) of sigma of c * R(gamma).
/// Within each algebra block the layout is cell-major: cell index times fiber
/// multiplicity plus fiber index.
inline AssembledComplex assemble_cochain_complex(const CwComplexData& cw, const FlatBundle& bundle,
                                                 double eps_d2 = hcx::kDefaultEpsD2) {
    validate_cw(cw);
    const VnAlgebra& alg = bundle.fiber.algebra;
    int P = cw.dim();
    std::vector<HilbertModule> modules;
    for (int p = 0; p <= P; ++p) {
        std::vector<int> mult(alg.size());
        for (std::size_t i = 0; i < alg.size(); ++i)
            mult[i] = bundle.fiber.mult[i] * static_cast<int>(cw.cells[p].size());
        modules.push_back(HilbertModule::make(alg, std::move(mult)));
    }
    std::map<std::string, ModuleMorphism> word_cache;
    auto eval = [&](const std::string& w) -> const ModuleMorphism& {
        auto it = word_cache.find(w);
        if (it == word_cache.end()) it = word_cache.emplace(w, bundle.evaluate(w)).first;
        return it->second;
    };
    std::vector<ModuleMorphism> diffs;
    for (int p = 0; p < P; ++p) {
        std::map<std::string, int> col;
        for (std::size_t j = 0; j < cw.cells[p].size(); ++j) col[cw.cells[p][j]] = static_cast<int>(j);
        std::vector<Matrix> blocks;
        blocks.reserve(alg.size());
        for (std::size_t i = 0; i < alg.size(); ++i)
            blocks.push_back(Matrix::Zero(modules[p + 1].mult[i], modules[p].mult[i]));
        for (std::size_t r = 0; r < cw.cells[p + 1].size(); ++r) {
            for (const auto& term : cw.boundary.at(cw.cells[p + 1][r])) {
                const ModuleMorphism& R = eval(term.word);
                int c = col.at(term.cell);
                for (std::size_t i = 0; i < alg.size(); ++i) {
                    int m = bundle.fiber.mult[i];
                    if (m == 0) continue;
                    blocks[i].block(static_cast<long>(r) * m, static_cast<long>(c) * m, m, m) +=
                        static_cast<double>(term.coeff) * R.blocks[i];
                }
            }
        }
        diffs.push_back(ModuleMorphism{modules[p], modules[p + 1], std::move(blocks)});
    }
    AssembledComplex out;
    out.complex = HilbertComplex::make(std::move(modules), std::move(diffs), eps_d2);
    out.cells = cw.cells;
    return out;
}

// ---------------------------------------------------------------------------
// Barycentric subdivision (dimension <= 2)
// ---------------------------------------------------------------------------

struct Subdivision {
    CwComplexData fine;
    // Chain-level subdivision S of each coarse cell's lift in the fine basis.
    std::map<std::string, std::vector<BoundaryTerm>> chain_map;
};

namespace detail {

inline std::string emit_word(const GroupSpec& g, const Word& w) {
    return word_to_string(normalize_word(g, w));
}

/// One step of a boundary-word walk: the edge translate it uses and the
/// arrival data, per the lift convention of edge_ends. A step over edge a at
/// translate h runs from h.tail_word.tail to h.head_word.head (or backwards).
struct WalkStep {
    std::string edge;
    int sign = 1;  // +1 forward, -1 backward
    Word translate;
    Word next_pos;
    std::string next_vertex;
};

inline WalkStep walk_step(const CwComplexData& cw, const GroupSpec& g, const std::string& step,
                          const Word& pos) {
    Word sw = parse_word(step);
    WalkStep out;
    out.edge = sw.front().gen;
    out.sign = sw.front().exp;
    EdgeEnds e = edge_ends(cw, out.edge);
    if (out.sign == 1) {
        out.translate = normalize_word(g, concat_words(pos, inverse_word(e.tail_word)));
        out.next_pos = normalize_word(g, concat_words(out.translate, e.head_word));
        out.next_vertex = e.head;
    } else {
        out.translate = normalize_word(g, concat_words(pos, inverse_word(e.head_word)));
        out.next_pos = normalize_word(g, concat_words(out.translate, e.tail_word));
        out.next_vertex = e.tail;
    }
    return out;
}

inline std::string walk_start_vertex(const CwComplexData& cw, const std::string& step) {
    Word sw = parse_word(step);
    EdgeEnds e = edge_ends(cw, sw.front().gen);
    return sw.front().exp == 1 ? e.tail : e.head;
}

}  // namespace detail

/// Barycentric subdivision with equivariant bookkeeping, for complexes of
/// dimension <= 2. Edges split at a midpoint vertex. A 2-cell with a boundary
/// word of length k gains a barycenter, k corner spokes, k midpoint spokes
/// and 2k triangles; the walk over the attaching loop tracks the translate at
/// which each fine cell sits inside the lifted face, and every new cell's
/// chosen lift is re-based at its own walk origin so its boundary data is
/// self-contained. For cyclic/commuting groups the walk-derived coarse
/// boundary is cross-checked against the stored chain.
inline Subdivision barycentric_subdivide(const CwComplexData& cw, const GroupSpec& group) {
    validate_cw(cw);
    if (cw.dim() > 2)
        throw Error(errc::unsupported_dimension, "subdivision implemented for dimension <= 2");
    Subdivision out;
    CwComplexData& fine = out.fine;
    fine.cells.resize(cw.cells.size());
    auto emit = [&](const Word& w) { return detail::emit_word(group, w); };

    for (const auto& v : cw.cells[0]) {
        fine.cells[0].push_back(v);
        out.chain_map[v] = {{v, "", 1}};
    }
    if (cw.dim() >= 1) {
        for (const auto& e : cw.cells[1]) {
            EdgeEnds ends = edge_ends(cw, e);
            std::string mid = e + "#m";
            fine.cells[0].push_back(mid);
            fine.cells[1].push_back(e + "#0");
            fine.cells[1].push_back(e + "#1");
            fine.boundary[e + "#0"] = {{mid, "", 1}, {ends.tail, emit(ends.tail_word), -1}};
            fine.boundary[e + "#1"] = {{ends.head, emit(ends.head_word), 1}, {mid, "", -1}};
            out.chain_map[e] = {{e + "#0", "", 1}, {e + "#1", "", 1}};
        }
    }
    if (cw.dim() >= 2) {
        for (const auto& f : cw.cells[2]) {
            auto wit = cw.words.find(f);
            if (wit == cw.words.end())
                throw Error(errc::invalid_argument,
                            "2-cell '" + f + "' has no boundary word; subdivision needs one");
            const auto& steps = wit->second;
            if (steps.empty())
                throw Error(errc::invalid_argument, "2-cell '" + f + "' has an empty boundary word");
            int k = static_cast<int>(steps.size());
            std::string bary = f + "#b";
            fine.cells[0].push_back(bary);

            // Walk the attaching loop from the canonical lift of its start.
            std::vector<detail::WalkStep> walk;
            std::vector<Word> corner_pos(k);
            std::vector<std::string> corner_vertex(k);
            Word pos;
            std::string vertex = detail::walk_start_vertex(cw, steps.front());
            std::string start_vertex = vertex;
            std::map<std::string, std::map<std::string, long>> derived;  // edge -> word -> coeff
            for (int j = 0; j < k; ++j) {
                corner_pos[j] = pos;
                corner_vertex[j] = vertex;
                detail::WalkStep s = detail::walk_step(cw, group, steps[j], pos);
                derived[s.edge][emit(s.translate)] += s.sign;
                pos = s.next_pos;
                vertex = s.next_vertex;
                walk.push_back(std::move(s));
            }
            if (vertex != start_vertex)
                throw Error(errc::invalid_argument,
                            "boundary word of '" + f + "' does not close up: ends at '" + vertex +
                                "', started at '" + start_vertex + "'");
            if (group.kind != GroupSpec::Kind::finite_presented) {
                std::map<std::string, std::map<std::string, long>> stored;
                for (const auto& t : cw.boundary.at(f))
                    stored[t.cell][emit(parse_word(t.word))] += t.coeff;
                auto prune = [](std::map<std::string, std::map<std::string, long>>& m) {
                    for (auto& [cell, terms] : m)
                        std::erase_if(terms, [](const auto& kv) { return kv.second == 0; });
                    std::erase_if(m, [](const auto& kv) { return kv.second.empty(); });
                };
                prune(derived);
                prune(stored);
                if (derived != stored)
                    throw Error(errc::invalid_argument,
                                "boundary word of '" + f +
                                    "' disagrees with its stored boundary chain");
            }

            // Fine cells. With g_j the translate of corner j, sigma_j the
            // translate of step j's edge and g_k the relator translate, the
            // canonical lifts are re-based so that:
            //   corner spoke cs_j:   bary at g_j^{-1},  corner at 1
            //   midpoint spoke ms_j: bary at sigma_j^{-1}, midpoint at 1
            //   triangle ta_j: (step first half at g_j^{-1} sigma_j) + ms_j - cs_j
            //   triangle tb_j: (second half at 1) + (cs_{j+1} at sigma_j^{-1} g_{j+1}) - ms_j
            // and S(f) = sum_j (g_j . ta_j + sigma_j . tb_j).
            std::vector<BoundaryTerm> sf;
            for (int j = 0; j < k; ++j) {
                const detail::WalkStep& s = walk[j];
                const Word& gj = corner_pos[j];
                const Word& gnext = j + 1 < k ? corner_pos[j + 1] : pos;
                std::string cs = f + "#cs" + std::to_string(j);
                std::string ms = f + "#ms" + std::to_string(j);
                std::string cs_next = f + "#cs" + std::to_string((j + 1) % k);
                fine.cells[1].push_back(cs);
                fine.cells[1].push_back(ms);
                fine.boundary[cs] = {{bary, emit(inverse_word(gj)), 1}, {corner_vertex[j], "", -1}};
                fine.boundary[ms] = {{bary, emit(inverse_word(s.translate)), 1},
                                     {s.edge + "#m", "", -1}};
                std::string ta = f + "#t" + std::to_string(j) + "a";
                std::string tb = f + "#t" + std::to_string(j) + "b";
                fine.cells[2].push_back(ta);
                fine.cells[2].push_back(tb);
                std::string first_half = s.sign == 1 ? s.edge + "#0" : s.edge + "#1";
                std::string second_half = s.sign == 1 ? s.edge + "#1" : s.edge + "#0";
                Word rebase_ta = concat_words(inverse_word(gj), s.translate);
                Word handoff = concat_words(inverse_word(s.translate), gnext);
                fine.boundary[ta] = {{first_half, emit(rebase_ta), s.sign},
                                     {ms, emit(rebase_ta), 1},
                                     {cs, "", -1}};
                fine.boundary[tb] = {{second_half, "", s.sign},
                                     {cs_next, emit(handoff), 1},
                                     {ms, "", -1}};
                std::string inv_suffix = s.sign == 1 ? "" : "^-1";
                fine.words[ta] = {first_half + inv_suffix, ms, cs + "^-1"};
                fine.words[tb] = {second_half + inv_suffix, cs_next, ms + "^-1"};
                sf.push_back({ta, emit(gj), 1});
                sf.push_back({tb, emit(s.translate), 1});
            }
            out.chain_map[f] = std::move(sf);
        }
    }
    validate_cw(fine);
    return out;
}

/// The cochain comparison map dual to the chain-level subdivision: it sends a
/// fine cochain to the coarse cochain evaluating each coarse cell on its
/// subdivision. A chain map from the fine assembled complex to the coarse
/// one, and a quasi-isomorphism.
inline ChainMap comparison_chain_map(const AssembledComplex& fine, const AssembledComplex& coarse,
                                     const Subdivision& s, const FlatBundle& bundle) {
    const VnAlgebra& alg = bundle.fiber.algebra;
    std::vector<ModuleMorphism> comps;
    for (std::size_t p = 0; p < coarse.cells.size(); ++p) {
        std::map<std::string, int> fine_col;
        for (std::size_t j = 0; j < fine.cells[p].size(); ++j)
            fine_col[fine.cells[p][j]] = static_cast<int>(j);
        std::vector<Matrix> blocks;
        blocks.reserve(alg.size());
        for (std::size_t i = 0; i < alg.size(); ++i)
            blocks.push_back(Matrix::Zero(coarse.complex.modules[p].mult[i],
                                          fine.complex.modules[p].mult[i]));
        for (std::size_t r = 0; r < coarse.cells[p].size(); ++r) {
            for (const auto& term : s.chain_map.at(coarse.cells[p][r])) {
                ModuleMorphism R = bundle.evaluate(term.word);
                int c = fine_col.at(term.cell);
                for (std::size_t i = 0; i < alg.size(); ++i) {
                    int m = bundle.fiber.mult[i];
                    if (m == 0) continue;
                    blocks[i].block(static_cast<long>(r) * m, static_cast<long>(c) * m, m, m) +=
                        static_cast<double>(term.coeff) * R.blocks[i];
                }
            }
        }
        comps.push_back(
            ModuleMorphism{fine.complex.modules[p], coarse.complex.modules[p], std::move(blocks)});
    }
    return ChainMap::make(fine.complex, coarse.complex, std::move(comps));
}

// ---------------------------------------------------------------------------
// Cech cocycles on a cover's nerve
// ---------------------------------------------------------------------------

struct CechTransition {
    std::string from, to;   // open sets
    std::string component;  // overlap component label
    ModuleMorphism map;     // g_{from,to} on that component
};

struct CechTriple {
    int uv = -1, vw = -1, uw = -1;  // indices into transitions
};

struct CechCocycle {
    std::vector<std::string> sets;
    HilbertModule fiber;
    std::vector<CechTransition> transitions;
    std::vector<CechTriple> triples;  // flagged triple overlaps to check
};

inline void validate_cocycle(const CechCocycle& c, double tol = kDefaultRelationTol) {
    std::set<std::string> names(c.sets.begin(), c.sets.end());
    if (names.size() != c.sets.size())
        throw Error(errc::invalid_argument, "duplicate open set names");
    if (c.sets.empty()) throw Error(errc::invalid_argument, "cover needs at least one set");
    for (const auto& t : c.transitions) {
        if (!names.count(t.from) || !names.count(t.to))
            throw Error(errc::invalid_argument,
                        "transition references unknown set '" + t.from + "' or '" + t.to + "'");
        if (!t.map.domain.same_as(c.fiber) || !t.map.codomain.same_as(c.fiber))
            throw Error(errc::shape_mismatch, "transition map is not an endomorphism of the fiber");
        if (t.from == t.to) {
            double r = hmod::operator_norm(
                add_morphisms(t.map, scale_morphism(-1.0, hmod::identity_morphism(c.fiber))));
            if (r > tol)
                throw Error(errc::cocycle_violated,
                            "self transition on '" + t.from + "' differs from the identity by " +
                                std::to_string(r));
        }
    }
    for (const auto& tr : c.triples) {
        auto at = [&](int i) -> const CechTransition& {
            if (i < 0 || i >= static_cast<int>(c.transitions.size()))
                throw Error(errc::invalid_argument, "triple references a missing transition");
            return c.transitions[i];
        };
        const auto& uv = at(tr.uv);
        const auto& vw = at(tr.vw);
        const auto& uw = at(tr.uw);
        if (uv.from != uw.from || uv.to != vw.from || vw.to != uw.to)
            throw Error(errc::invalid_argument, "triple transitions do not chain");
        double r = hmod::operator_norm(
            add_morphisms(compose(uv.map, vw.map), scale_morphism(-1.0, uw.map)));
        double scale = hmod::operator_norm(uv.map) * hmod::operator_norm(vw.map);
        if (r > tol * (1.0 + scale))
            throw Error(errc::cocycle_violated,
                        "cocycle identity fails on triple (" + uv.from + "," + uv.to + "," +
                            uw.to + ") with residual " + std::to_string(r));
    }
}

struct CocycleBundle {
    CwComplexData nerve;  // vertices = sets, edges = overlap components
    FlatBundle bundle;    // free monodromy on the nerve's spanning-tree loops
};

/// Glue a flat bundle out of a Cech cocycle: take the nerve's 1-skeleton,
/// pick a BFS spanning tree, trivialize along it, and assign each of the k
/// remaining edges its loop monodromy h_U g_UV h_V^{-1} in the root frame.
/// The loop generators are declared commuting, which FlatBundle::make
/// verifies; a genuinely noncommuting system of loops is rejected there.
inline CocycleBundle bundle_from_cocycle(const CechCocycle& c,
                                         double relation_tol = kDefaultRelationTol) {
    validate_cocycle(c, relation_tol);
    std::map<std::string, int> set_index;
    for (std::size_t i = 0; i < c.sets.size(); ++i) set_index[c.sets[i]] = static_cast<int>(i);

    // BFS spanning tree; frame[x] transports the fiber over x to the root
    // frame (g_UV maps the V-frame to the U-frame over the overlap).
    std::vector<bool> seen(c.sets.size(), false);
    std::vector<ModuleMorphism> frame(c.sets.size(), hmod::identity_morphism(c.fiber));
    std::vector<bool> in_tree(c.transitions.size(), false);
    std::queue<int> q;
    seen[0] = true;
    q.push(0);
    while (!q.empty()) {
        int u = q.front();
        q.pop();
        for (std::size_t t = 0; t < c.transitions.size(); ++t) {
            const auto& tr = c.transitions[t];
            int a = set_index.at(tr.from), b = set_index.at(tr.to);
            int other;
            if (a == u && !seen[b]) other = b;
            else if (b == u && !seen[a]) other = a;
            else continue;
            seen[other] = true;
            in_tree[t] = true;
            if (a == u)
                frame[b] = compose(frame[u], tr.map);
            else
                frame[a] = compose(frame[u], hcx::invert_morphism(tr.map));
            q.push(other);
        }
    }
    for (std::size_t i = 0; i < c.sets.size(); ++i)
        if (!seen[i])
            throw Error(errc::invalid_argument, "nerve is disconnected at set '" + c.sets[i] + "'");

    CocycleBundle out;
    out.nerve.cells.resize(2);
    out.nerve.cells[0] = c.sets;
    std::vector<std::string> gens;
    std::map<std::string, ModuleMorphism> images;
    int loop_count = 0;
    for (std::size_t t = 0; t < c.transitions.size(); ++t) {
        const auto& tr = c.transitions[t];
        if (tr.from == tr.to) continue;  // self overlaps carry no edge
        std::string edge = "e_" + tr.from + "_" + tr.to + "_" + tr.component;
        out.nerve.cells[1].push_back(edge);
        if (in_tree[t]) {
            out.nerve.boundary[edge] = {{tr.to, "", 1}, {tr.from, "", -1}};
        } else {
            std::string gen = "l" + std::to_string(++loop_count);
            gens.push_back(gen);
            int a = set_index.at(tr.from), b = set_index.at(tr.to);
            images.emplace(gen,
                           compose(frame[a], compose(tr.map, hcx::invert_morphism(frame[b]))));
            out.nerve.boundary[edge] = {{tr.to, gen, 1}, {tr.from, "", -1}};
        }
    }
    out.bundle =
        FlatBundle::make(GroupSpec::commuting(std::move(gens)), c.fiber, std::move(images),
                         relation_tol);
    return out;
}

// ---------------------------------------------------------------------------
// Group models: algebra + regular fiber + generator monodromy
// ---------------------------------------------------------------------------

struct GroupModel {
    GroupSpec group;
    VnAlgebra algebra;
    HilbertModule fiber;
    std::map<std::string, ModuleMorphism> images;

    FlatBundle bundle(double relation_tol = kDefaultRelationTol) const {
        return FlatBundle::make(group, fiber, images, relation_tol);
    }
};

/// Group von Neumann algebra of Z/n in the character basis: n scalar blocks
/// of weight 1/n; the generator acts on block j by the root of unity
/// e^{2 pi i j / n}. The fiber is the regular module, of dimension 1.
inline GroupModel cyclic_group_model(int n, const std::string& gen = "x") {
    if (n < 1) throw Error(errc::invalid_argument, "cyclic order must be >= 1");
    std::vector<vna::FactorBlock> blocks;
    blocks.reserve(n);
    for (int j = 0; j < n; ++j) blocks.push_back({"chi" + std::to_string(j), 1, 1.0, 1.0 / n});
    GroupModel m;
    m.group = GroupSpec::finite_cyclic(n, gen);
    m.algebra = VnAlgebra::make(std::move(blocks));
    m.fiber = hmod::regular_module(m.algebra);
    std::vector<Matrix> img;
    img.reserve(n);
    for (int j = 0; j < n; ++j) {
        double theta = 2.0 * std::numbers::pi * j / n;
        Matrix b(1, 1);
        b(0, 0) = std::complex<double>(std::cos(theta), std::sin(theta));
        img.push_back(std::move(b));
    }
    m.images.emplace(gen, ModuleMorphism{m.fiber, m.fiber, std::move(img)});
    return m;
}

/// Finite sample of the group von Neumann algebra of Z: fibers at the
/// midpoint frequencies omega_j = (j + 1/2)/N, each of weight 1/N, with the
/// generator acting by e^{2 pi i omega_j}. The midpoint grid keeps the
/// spectrum away from frequency 0, mimicking the absence of atoms.
inline GroupModel sampled_z_model(int fibers, const std::string& gen = "x") {
    if (fibers < 1) throw Error(errc::invalid_argument, "need at least one fiber");
    std::vector<vna::FactorBlock> blocks;
    blocks.reserve(fibers);
    for (int j = 0; j < fibers; ++j)
        blocks.push_back({"w" + std::to_string(j), 1, 1.0, 1.0 / fibers});
    GroupModel m;
    m.group = GroupSpec::commuting({gen});
    m.algebra = VnAlgebra::make(std::move(blocks));
    m.fiber = hmod::regular_module(m.algebra);
    std::vector<Matrix> img;
    img.reserve(fibers);
    for (int j = 0; j < fibers; ++j) {
        double theta = 2.0 * std::numbers::pi * (j + 0.5) / fibers;
        Matrix b(1, 1);
        b(0, 0) = std::complex<double>(std::cos(theta), std::sin(theta));
        img.push_back(std::move(b));
    }
    m.images.emplace(gen, ModuleMorphism{m.fiber, m.fiber, std::move(img)});
    return m;
}

/// Sampled Z^k on a midpoint grid with `fibers` points per axis: each block
/// carries a frequency vector; generator number a acts by e^{2 pi i omega_a}.
inline GroupModel sampled_zk_model(int k, int fibers, const std::vector<std::string>& gens) {
    if (k < 1 || static_cast<int>(gens.size()) != k)
        throw Error(errc::invalid_argument, "need one generator name per axis");
    if (fibers < 1) throw Error(errc::invalid_argument, "need at least one fiber per axis");
    long total = 1;
    for (int a = 0; a < k; ++a) total *= fibers;
    std::vector<vna::FactorBlock> blocks;
    blocks.reserve(total);
    for (long j = 0; j < total; ++j)
        blocks.push_back({"w" + std::to_string(j), 1, 1.0, 1.0 / static_cast<double>(total)});
    GroupModel m;
    m.group = GroupSpec::commuting(gens);
    m.algebra = VnAlgebra::make(std::move(blocks));
    m.fiber = hmod::regular_module(m.algebra);
    long stride = 1;
    for (int a = 0; a < k; ++a) {
        std::vector<Matrix> img;
        img.reserve(total);
        for (long j = 0; j < total; ++j) {
            long idx = (j / stride) % fibers;
            double theta = 2.0 * std::numbers::pi * (idx + 0.5) / fibers;
            Matrix blk(1, 1);
            blk(0, 0) = std::complex<double>(std::cos(theta), std::sin(theta));
            img.push_back(std::move(blk));
        }
        m.images.emplace(gens[a], ModuleMorphism{m.fiber, m.fiber, std::move(img)});
        stride *= fibers;
    }
    return m;
}

}  // namespace l2hodge::flatcw
