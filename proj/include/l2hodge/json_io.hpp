#pragma once

#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "l2hodge/algebra.hpp"
#include "l2hodge/complex.hpp"
#include "l2hodge/errors.hpp"
#include "l2hodge/flatcw.hpp"
#include "l2hodge/module.hpp"
#include "l2hodge/witten.hpp"

namespace l2hodge::io {

using nlohmann::json;
using vna::Matrix;

inline constexpr int kSchemaVersion = 1;

inline json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(errc::parse_error, "cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw Error(errc::parse_error, "invalid JSON in '" + path + "': " + e.what());
    }
    return j;
}

/// Matrices are nested row-major arrays of [re, im] pairs.
inline Matrix parse_matrix(const json& j) {
    if (!j.is_array()) throw Error(errc::parse_error, "matrix must be an array of rows");
    long rows = static_cast<long>(j.size());
    long cols = rows > 0 ? static_cast<long>(j.at(0).size()) : 0;
    Matrix m(rows, cols);
    for (long r = 0; r < rows; ++r) {
        const json& row = j.at(r);
        if (!row.is_array() || static_cast<long>(row.size()) != cols)
            throw Error(errc::parse_error, "ragged matrix rows");
        for (long c = 0; c < cols; ++c) {
            const json& e = row.at(c);
            if (e.is_number()) {
                m(r, c) = e.get<double>();
            } else if (e.is_array() && e.size() == 2) {
                m(r, c) = std::complex<double>(e.at(0).get<double>(), e.at(1).get<double>());
            } else {
                throw Error(errc::parse_error, "matrix entry must be a number or [re, im]");
            }
        }
    }
    return m;
}

inline json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (long r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (long c = 0; c < m.cols(); ++c)
            row.push_back(json::array({m(r, c).real(), m(r, c).imag()}));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline vna::VnAlgebra parse_algebra(const json& j) {
    if (!j.contains("blocks")) throw Error(errc::parse_error, "algebra needs a 'blocks' array");
    std::vector<vna::FactorBlock> blocks;
    for (const json& b : j.at("blocks")) {
        vna::FactorBlock fb;
        fb.label = b.at("label").get<std::string>();
        fb.n = b.value("n", 1);
        fb.mu = b.value("mu", 1.0);
        fb.rho = b.value("rho", 1.0);
        blocks.push_back(std::move(fb));
    }
    return vna::VnAlgebra::make(std::move(blocks));
}

inline hmod::HilbertModule parse_module(const json& j, const vna::VnAlgebra& a) {
    if (!j.contains("mult")) throw Error(errc::parse_error, "module needs a 'mult' array");
    return hmod::HilbertModule::make(a, j.at("mult").get<std::vector<int>>());
}

inline std::vector<Matrix> parse_block_list(const json& j, std::size_t expected) {
    if (!j.is_array() || j.size() != expected)
        throw Error(errc::parse_error, "expected one matrix per algebra block");
    std::vector<Matrix> blocks;
    blocks.reserve(expected);
    for (const json& b : j) blocks.push_back(parse_matrix(b));
    return blocks;
}

inline hmod::ModuleMorphism parse_morphism(const json& j, const hmod::HilbertModule& dom,
                                           const hmod::HilbertModule& cod) {
    return hmod::ModuleMorphism::make(dom, cod,
                                      parse_block_list(j.at("blocks"), dom.algebra.size()));
}

inline hcx::HilbertComplex parse_complex(const json& j, const vna::VnAlgebra& a,
                                         double eps_d2 = hcx::kDefaultEpsD2) {
    if (!j.contains("modules")) throw Error(errc::parse_error, "complex needs a 'modules' array");
    std::vector<hmod::HilbertModule> modules;
    for (const json& m : j.at("modules")) modules.push_back(parse_module(m, a));
    std::vector<hmod::ModuleMorphism> diffs;
    const json& dj = j.value("differentials", json::array());
    for (std::size_t p = 0; p < dj.size(); ++p) {
        if (p + 1 >= modules.size())
            throw Error(errc::parse_error, "more differentials than module pairs");
        diffs.push_back(parse_morphism(dj.at(p), modules[p], modules[p + 1]));
    }
    return hcx::HilbertComplex::make(std::move(modules), std::move(diffs), eps_d2);
}

inline flatcw::GroupSpec parse_group(const json& j) {
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "finite_cyclic")
        return flatcw::GroupSpec::finite_cyclic(j.at("order").get<int>(),
                                                j.value("generator", std::string("x")));
    if (kind == "commuting")
        return flatcw::GroupSpec::commuting(j.at("generators").get<std::vector<std::string>>());
    if (kind == "finite_presented")
        return flatcw::GroupSpec::finite_presented(
            j.at("generators").get<std::vector<std::string>>(),
            j.value("relations", std::vector<std::string>{}));
    throw Error(errc::parse_error, "unknown group kind '" + kind + "'");
}

inline flatcw::CwComplexData parse_cw(const json& j) {
    flatcw::CwComplexData cw;
    if (!j.contains("cells")) throw Error(errc::parse_error, "cw needs a 'cells' array");
    for (const json& dim : j.at("cells"))
        cw.cells.push_back(dim.get<std::vector<std::string>>());
    const json boundary = j.value("boundary", json::object());
    for (const auto& [id, terms] : boundary.items()) {
        std::vector<flatcw::BoundaryTerm> list;
        for (const json& t : terms) {
            flatcw::BoundaryTerm bt;
            bt.cell = t.at("cell").get<std::string>();
            bt.word = t.value("word", std::string());
            bt.coeff = t.at("coeff").get<int>();
            list.push_back(std::move(bt));
        }
        cw.boundary.emplace(id, std::move(list));
    }
    const json words = j.value("words", json::object());
    for (const auto& [id, steps] : words.items())
        cw.words.emplace(id, steps.get<std::vector<std::string>>());
    flatcw::validate_cw(cw);
    return cw;
}

inline wit::MorseData parse_morse(const json& j) {
    wit::MorseData f;
    for (const auto& [cell, v] : j.at("values").items()) f.values[cell] = v.get<double>();
    return f;
}

/// Built-in group models; fibers_override (if positive) replaces the sampled
/// fiber counts, leaving finite models untouched.
inline flatcw::GroupModel parse_model(const json& j, int fibers_override = 0) {
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "cyclic")
        return flatcw::cyclic_group_model(j.at("order").get<int>(),
                                          j.value("generator", std::string("x")));
    if (kind == "sampled_z") {
        int fibers = fibers_override > 0 ? fibers_override : j.at("fibers").get<int>();
        return flatcw::sampled_z_model(fibers, j.value("generator", std::string("x")));
    }
    if (kind == "sampled_zk") {
        int fibers = fibers_override > 0 ? fibers_override : j.at("fibers").get<int>();
        auto gens = j.at("generators").get<std::vector<std::string>>();
        return flatcw::sampled_zk_model(static_cast<int>(gens.size()), fibers, gens);
    }
    throw Error(errc::parse_error, "unknown model kind '" + kind + "'");
}

struct ParseOptions {
    int fibers_override = 0;
    double eps_d2 = hcx::kDefaultEpsD2;
    double relation_tol = flatcw::kDefaultRelationTol;
};

/// A parsed input document: any subset of the sections may be present.
struct Document {
    int schema_version = kSchemaVersion;
    std::optional<vna::VnAlgebra> algebra;
    std::optional<hmod::HilbertModule> module;
    std::optional<hcx::HilbertComplex> complex;
    std::optional<flatcw::GroupSpec> group;
    std::optional<flatcw::CwComplexData> cw;
    std::optional<flatcw::FlatBundle> bundle;
    std::optional<wit::MorseData> morse;
    std::optional<flatcw::CechCocycle> cocycle;
    std::vector<std::string> sections;
};

inline Document parse_document(const json& j, const ParseOptions& opt = {}) {
    Document doc;
    doc.schema_version = j.value("schema_version", kSchemaVersion);
    if (doc.schema_version != kSchemaVersion)
        throw Error(errc::parse_error,
                    "unsupported schema_version " + std::to_string(doc.schema_version));
    if (j.contains("algebra")) {
        doc.algebra = parse_algebra(j.at("algebra"));
        doc.sections.push_back("algebra");
    }

    std::optional<flatcw::GroupModel> model;
    if (j.contains("model")) {
        model = parse_model(j.at("model"), opt.fibers_override);
        doc.sections.push_back("model");
        if (!doc.algebra) doc.algebra = model->algebra;
    }
    if (j.contains("module")) {
        if (!doc.algebra)
            throw Error(errc::parse_error, "module section needs an algebra or model section");
        doc.module = parse_module(j.at("module"), *doc.algebra);
        doc.sections.push_back("module");
    }
    if (j.contains("complex")) {
        if (!doc.algebra)
            throw Error(errc::parse_error, "complex section needs an algebra or model section");
        doc.complex = parse_complex(j.at("complex"), *doc.algebra, opt.eps_d2);
        doc.sections.push_back("complex");
    }
    if (j.contains("group")) {
        doc.group = parse_group(j.at("group"));
        doc.sections.push_back("group");
    }
    if (j.contains("cw")) {
        doc.cw = parse_cw(j.at("cw"));
        doc.sections.push_back("cw");
    }
    if (j.contains("morse")) {
        doc.morse = parse_morse(j.at("morse"));
        doc.sections.push_back("morse");
    }
    if (model) {
        doc.bundle = model->bundle(opt.relation_tol);
        if (j.contains("bundle"))
            throw Error(errc::parse_error, "give either a model or an explicit bundle, not both");
    } else if (j.contains("bundle")) {
        const json& bj = j.at("bundle");
        if (!doc.algebra)
            throw Error(errc::parse_error, "bundle section needs an algebra section");
        if (!doc.group)
            throw Error(errc::parse_error, "bundle section needs a group section");
        hmod::HilbertModule fiber =
            hmod::HilbertModule::make(*doc.algebra, bj.at("fiber_mult").get<std::vector<int>>());
        std::map<std::string, hmod::ModuleMorphism> images;
        for (const auto& [gen, blocks] : bj.at("images").items())
            images.emplace(gen, hmod::ModuleMorphism::make(
                                    fiber, fiber, parse_block_list(blocks, doc.algebra->size())));
        doc.bundle = flatcw::FlatBundle::make(*doc.group, std::move(fiber), std::move(images),
                                              opt.relation_tol);
        doc.sections.push_back("bundle");
    }
    if (j.contains("cocycle")) {
        const json& cj = j.at("cocycle");
        if (!doc.algebra)
            throw Error(errc::parse_error, "cocycle section needs an algebra or model section");
        flatcw::CechCocycle c;
        c.sets = cj.at("sets").get<std::vector<std::string>>();
        hmod::HilbertModule fiber =
            cj.contains("fiber_mult")
                ? hmod::HilbertModule::make(*doc.algebra,
                                            cj.at("fiber_mult").get<std::vector<int>>())
                : (model ? model->fiber : hmod::regular_module(*doc.algebra));
        c.fiber = fiber;
        for (const json& t : cj.value("transitions", json::array())) {
            flatcw::CechTransition tr;
            tr.from = t.at("from").get<std::string>();
            tr.to = t.at("to").get<std::string>();
            tr.component = t.value("component", std::string("0"));
            tr.map = hmod::ModuleMorphism::make(
                fiber, fiber, parse_block_list(t.at("blocks"), doc.algebra->size()));
            c.transitions.push_back(std::move(tr));
        }
        for (const json& t : cj.value("triples", json::array())) {
            flatcw::CechTriple tr;
            tr.uv = t.at("uv").get<int>();
            tr.vw = t.at("vw").get<int>();
            tr.uw = t.at("uw").get<int>();
            c.triples.push_back(tr);
        }
        doc.cocycle = std::move(c);
        doc.sections.push_back("cocycle");
    }
    if (model && !doc.group) doc.group = model->group;
    return doc;
}

inline Document load_document(const std::string& path, const ParseOptions& opt = {}) {
    return parse_document(load_json(path), opt);
}

struct ResolvedComplex {
    hcx::HilbertComplex complex;
    std::optional<std::vector<std::vector<std::string>>> cells;  // when assembled from cw
};

/// The complex a document denotes: an explicit one wins; otherwise cw + bundle
/// are assembled; otherwise a cocycle's nerve is assembled.
inline ResolvedComplex resolve_complex(const Document& doc, double eps_d2 = hcx::kDefaultEpsD2) {
    if (doc.complex) return {*doc.complex, std::nullopt};
    if (doc.cw && doc.bundle) {
        flatcw::AssembledComplex a = flatcw::assemble_cochain_complex(*doc.cw, *doc.bundle, eps_d2);
        return {std::move(a.complex), std::move(a.cells)};
    }
    if (doc.cocycle) {
        flatcw::CocycleBundle cb = flatcw::bundle_from_cocycle(*doc.cocycle);
        flatcw::AssembledComplex a = flatcw::assemble_cochain_complex(cb.nerve, cb.bundle, eps_d2);
        return {std::move(a.complex), std::move(a.cells)};
    }
    throw Error(errc::parse_error,
                "document has no complex: need 'complex', 'cw' + bundle/model, or 'cocycle'");
}

/// Fixed-format double for CSV output: %.17g round-trips exactly.
inline std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

struct GridSpec {
    double lo = 0.0, hi = 0.0;
    int steps = 0;
    bool log_spaced = true;

    std::vector<double> points() const {
        std::vector<double> xs;
        xs.reserve(steps);
        if (steps == 1) {
            xs.push_back(lo);
            return xs;
        }
        for (int i = 0; i < steps; ++i) {
            double t = static_cast<double>(i) / (steps - 1);
            xs.push_back(log_spaced ? lo * std::pow(hi / lo, t) : lo + (hi - lo) * t);
        }
        return xs;
    }
};

/// "lo:hi:steps" with an optional ":log" / ":lin" suffix.
inline GridSpec parse_grid(const std::string& text, bool default_log) {
    GridSpec g;
    g.log_spaced = default_log;
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        std::size_t colon = text.find(':', start);
        parts.push_back(text.substr(start, colon - start));
        if (colon == std::string::npos) break;
        start = colon + 1;
    }
    if (parts.size() < 3 || parts.size() > 4)
        throw Error(errc::invalid_argument, "grid must be lo:hi:steps[:log|lin], got '" + text + "'");
    try {
        g.lo = std::stod(parts[0]);
        g.hi = std::stod(parts[1]);
        g.steps = std::stoi(parts[2]);
    } catch (const std::exception&) {
        throw Error(errc::invalid_argument, "bad number in grid '" + text + "'");
    }
    if (parts.size() == 4) {
        if (parts[3] == "log") g.log_spaced = true;
        else if (parts[3] == "lin") g.log_spaced = false;
        else throw Error(errc::invalid_argument, "grid spacing must be 'log' or 'lin'");
    }
    if (g.steps < 1) throw Error(errc::invalid_argument, "grid needs at least one step");
    if (g.log_spaced && (!(g.lo > 0.0) || !(g.hi > 0.0)))
        throw Error(errc::invalid_argument, "log grid needs positive endpoints");
    if (g.steps > 1 && !(g.hi > g.lo))
        throw Error(errc::invalid_argument, "grid needs lo < hi");
    return g;
}

}  // namespace l2hodge::io
