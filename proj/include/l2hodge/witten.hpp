#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "l2hodge/complex.hpp"
#include "l2hodge/errors.hpp"
#include "l2hodge/flatcw.hpp"

namespace l2hodge::wit {

using flatcw::AssembledComplex;
using flatcw::CwComplexData;
using hmod::HilbertModule;
using hmod::ModuleMorphism;
using vna::Matrix;

/// A discrete Morse function: one real value per cell.
struct MorseData {
    std::map<std::string, double> values;

    double at(const std::string& cell) const {
        auto it = values.find(cell);
        if (it == values.end())
            throw Error(errc::missing_cell_value, "no Morse value for cell '" + cell + "'");
        return it->second;
    }
};

/// Check that every cell carries a value and that the function is a discrete
/// Morse function in Forman's sense: each cell has at most one exceptional
/// coface (value not above its own) and at most one exceptional face (value
/// not below its own), and never both.
inline void validate_morse(const CwComplexData& cw, const MorseData& f) {
    flatcw::validate_cw(cw);
    for (const auto& dim : cw.cells)
        for (const auto& id : dim) f.at(id);
    std::map<std::string, int> exceptional_up, exceptional_down;
    for (std::size_t p = 1; p < cw.cells.size(); ++p) {
        for (const auto& sigma : cw.cells[p]) {
            double fs = f.at(sigma);
            std::map<std::string, bool> counted;
            for (const auto& term : cw.boundary.at(sigma)) {
                if (counted[term.cell]) continue;
                counted[term.cell] = true;
                double ft = f.at(term.cell);
                if (ft >= fs) ++exceptional_down[sigma];
                if (ft >= fs) ++exceptional_up[term.cell];
            }
        }
    }
    for (const auto& [cell, n] : exceptional_down)
        if (n > 1)
            throw Error(errc::invalid_argument,
                        "cell '" + cell + "' has " + std::to_string(n) +
                            " faces with larger or equal value; not a discrete Morse function");
    for (const auto& [cell, n] : exceptional_up)
        if (n > 1)
            throw Error(errc::invalid_argument,
                        "cell '" + cell + "' has " + std::to_string(n) +
                            " cofaces with smaller or equal value; not a discrete Morse function");
    for (const auto& [cell, n] : exceptional_down)
        if (n == 1 && exceptional_up.count(cell) && exceptional_up.at(cell) == 1)
            throw Error(errc::invalid_argument,
                        "cell '" + cell +
                            "' is exceptional both upward and downward; not a discrete Morse function");
}

/// Critical cells per dimension: no exceptional face and no exceptional
/// coface. Forman pairing matches every non-critical cell with its unique
/// exceptional partner.
inline std::vector<std::vector<std::string>> critical_cells(const CwComplexData& cw,
                                                            const MorseData& f) {
    validate_morse(cw, f);
    std::map<std::string, bool> has_up, has_down;
    for (std::size_t p = 1; p < cw.cells.size(); ++p) {
        for (const auto& sigma : cw.cells[p]) {
            double fs = f.at(sigma);
            std::map<std::string, bool> counted;
            for (const auto& term : cw.boundary.at(sigma)) {
                if (counted[term.cell]) continue;
                counted[term.cell] = true;
                if (f.at(term.cell) >= fs) {
                    has_down[sigma] = true;
                    has_up[term.cell] = true;
                }
            }
        }
    }
    std::vector<std::vector<std::string>> crit(cw.cells.size());
    for (std::size_t p = 0; p < cw.cells.size(); ++p)
        for (const auto& id : cw.cells[p])
            if (!has_up[id] && !has_down[id]) crit[p].push_back(id);
    return crit;
}

/// Expected dimensions of the Morse cochain complex: per degree the number of
/// critical p-cells times dim_tau of the fiber, accumulated per algebra block
/// in the same form as a nu-weighted eigenvalue count.
inline std::vector<double> morse_complex_dims(const CwComplexData& cw, const MorseData& f,
                                              const HilbertModule& fiber) {
    auto crit = critical_cells(cw, f);
    std::vector<double> dims;
    dims.reserve(crit.size());
    for (const auto& cells : crit) {
        double d = 0.0;
        for (std::size_t i = 0; i < fiber.algebra.size(); ++i)
            d += fiber.algebra.nu(i) *
                 static_cast<double>(static_cast<long>(cells.size()) * fiber.mult[i]);
        dims.push_back(d);
    }
    return dims;
}

/// Witten deformation d_t = e^{-tF} d e^{tF}: the block from cell tau to cell
/// sigma is scaled by e^{t (F(tau) - F(sigma))}. At t = 0 the complex is
/// returned unchanged, bit for bit.
inline AssembledComplex deform(const AssembledComplex& x, const MorseData& f, double t) {
    for (const auto& dim : x.cells)
        for (const auto& id : dim) f.at(id);
    if (t == 0.0) return x;
    AssembledComplex out;
    out.cells = x.cells;
    std::vector<ModuleMorphism> diffs;
    int P = x.complex.top_degree();
    for (int p = 0; p < P; ++p) {
        const ModuleMorphism& d = x.complex.differentials[p];
        long rows = static_cast<long>(x.cells[p + 1].size());
        long cols = static_cast<long>(x.cells[p].size());
        std::vector<Matrix> blocks = d.blocks;
        for (std::size_t i = 0; i < blocks.size(); ++i) {
            if (rows == 0 || cols == 0 || blocks[i].rows() == 0) continue;
            long mr = blocks[i].rows() / rows;
            long mc = blocks[i].cols() / cols;
            for (long r = 0; r < rows; ++r) {
                double fs = f.at(x.cells[p + 1][r]);
                for (long c = 0; c < cols; ++c) {
                    double ft = f.at(x.cells[p][c]);
                    blocks[i].block(r * mr, c * mc, mr, mc) *= std::exp(t * (ft - fs));
                }
            }
        }
        diffs.push_back(ModuleMorphism{d.domain, d.codomain, std::move(blocks)});
    }
    out.complex = hcx::HilbertComplex{x.complex.modules, std::move(diffs)};
    return out;
}

/// The rescaled deformation e^t (t/pi)^{-1/2} d_t whose low-lying spectrum
/// matches the Morse complex normalization. Needs t > 0.
inline AssembledComplex scaled_deform(const AssembledComplex& x, const MorseData& f, double t) {
    if (!(t > 0.0)) throw Error(errc::nonpositive_t, "scaled deformation needs t > 0");
    AssembledComplex out = deform(x, f, t);
    double factor = std::exp(t) * std::sqrt(std::numbers::pi / t);
    for (auto& d : out.complex.differentials)
        for (auto& b : d.blocks) b *= factor;
    return out;
}

struct GapScanEntry {
    double t = 0.0;
    std::vector<double> small_count;    // nu-weighted eigenvalues <= split, per degree
    std::vector<long> small_count_raw;  // unweighted, per degree
    double max_small = 0.0;             // largest small eigenvalue across degrees (0 if none)
    double min_large = std::numeric_limits<double>::infinity();
    double ratio = std::numeric_limits<double>::infinity();  // min_large / max(max_small, floor)
};

struct GapReport {
    std::vector<GapScanEntry> entries;
    std::vector<double> morse_dims;  // expected small-cluster weights per degree
    double decay_slope = 0.0;        // least-squares slope of log(max_small) against t
    double decay_r2 = 0.0;
    int decay_points = 0;
};

inline constexpr double kDefaultSplit = 1.0;
inline constexpr double kRatioFloor = 1e-300;

/// Deform over a grid of t values and watch the spectrum split: the cluster
/// at or below `split` should carry exactly the Morse complex dimensions and
/// sink exponentially, while the rest stays above the gap.
inline GapReport gap_scan(const AssembledComplex& x, const CwComplexData& cw, const MorseData& f,
                          const HilbertModule& fiber, const std::vector<double>& t_grid,
                          double split = kDefaultSplit, int jobs = 1) {
    if (t_grid.empty()) throw Error(errc::invalid_argument, "empty t grid");
    GapReport report;
    report.morse_dims = morse_complex_dims(cw, f, fiber);
    int P = x.complex.top_degree();
    for (double t : t_grid) {
        AssembledComplex xt = deform(x, f, t);
        GapScanEntry entry;
        entry.t = t;
        entry.small_count.resize(P + 1, 0.0);
        entry.small_count_raw.resize(P + 1, 0);
        for (int p = 0; p <= P; ++p) {
            hcx::SpectralData s = hcx::spectrum(xt.complex, p, jobs);
            for (std::size_t i = 0; i < s.blocks.size(); ++i) {
                long count = 0;
                for (double ev : s.blocks[i].eigenvalues) {
                    if (ev <= split) {
                        ++count;
                        entry.max_small = std::max(entry.max_small, ev);
                    } else {
                        entry.min_large = std::min(entry.min_large, ev);
                    }
                }
                entry.small_count_raw[p] += count;
                entry.small_count[p] += s.module.algebra.nu(i) * static_cast<double>(count);
            }
        }
        entry.ratio = entry.min_large / std::max(entry.max_small, kRatioFloor);
        report.entries.push_back(std::move(entry));
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (const auto& e : report.entries) {
        if (e.max_small <= 0.0) continue;
        double y = std::log(e.max_small);
        sx += e.t;
        sy += y;
        sxx += e.t * e.t;
        sxy += e.t * y;
        ++n;
    }
    report.decay_points = n;
    if (n >= 2) {
        double det = n * sxx - sx * sx;
        if (det > 0.0) {
            report.decay_slope = (n * sxy - sx * sy) / det;
            double intercept = (sy - report.decay_slope * sx) / n;
            double ss_res = 0, ss_tot = 0, ybar = sy / n;
            for (const auto& e : report.entries) {
                if (e.max_small <= 0.0) continue;
                double y = std::log(e.max_small);
                double pred = intercept + report.decay_slope * e.t;
                ss_res += (y - pred) * (y - pred);
                ss_tot += (y - ybar) * (y - ybar);
            }
            report.decay_r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res == 0.0 ? 1.0 : 0.0);
        }
    }
    return report;
}

}  // namespace l2hodge::wit
