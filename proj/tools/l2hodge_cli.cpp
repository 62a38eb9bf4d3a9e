// l2hodge command line: batch computations on JSON documents describing
// finite von Neumann algebras, Hilbert cochain complexes and flat CW bundles.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "l2hodge/json_io.hpp"
#include "l2hodge/l2hodge.hpp"

namespace {

using namespace l2hodge;
using nlohmann::json;

json num_or_null(double x) {
    if (std::isfinite(x)) return json(x);
    return json(nullptr);
}

void write_output(const std::string& text, const std::string& out) {
    if (out.empty()) {
        std::fputs(text.c_str(), stdout);
        return;
    }
    std::ofstream f(out, std::ios::binary);
    if (!f) throw Error(errc::invalid_argument, "cannot write '" + out + "'");
    f << text;
}

void emit_json(const json& j, const std::string& out) { write_output(j.dump(2) + "\n", out); }

struct CommonOpts {
    std::string file;
    std::string out;
    std::string format = "json";
    int jobs = 1;
    int fibers = 0;
    double eps_d2 = hcx::kDefaultEpsD2;
    double relation_tol = flatcw::kDefaultRelationTol;

    io::ParseOptions parse_options() const { return {fibers, eps_d2, relation_tol}; }
};

void add_common(CLI::App* sub, CommonOpts& o, bool needs_file = true) {
    if (needs_file) sub->add_option("file", o.file, "input JSON document")->required();
    sub->add_option("--out", o.out, "write the report here instead of stdout");
    sub->add_option("--format", o.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    sub->add_option("--jobs", o.jobs, "worker threads for spectra")->check(CLI::PositiveNumber);
    sub->add_option("--fibers", o.fibers, "override sampled model fiber count");
    sub->add_option("--eps-d2", o.eps_d2, "tolerance for d.d = 0 checks");
    sub->add_option("--relation-tol", o.relation_tol, "tolerance for group relation checks");
}

std::pair<double, double> parse_window(const std::string& text) {
    auto colon = text.find(':');
    if (colon == std::string::npos)
        throw Error(errc::invalid_argument, "window must be lo:hi, got '" + text + "'");
    try {
        return {std::stod(text.substr(0, colon)), std::stod(text.substr(colon + 1))};
    } catch (const std::exception&) {
        throw Error(errc::invalid_argument, "bad number in window '" + text + "'");
    }
}

json betti_section(const hcx::HilbertComplex& x, double eps_null, int jobs) {
    json betti = json::array(), eps = json::array(), ambiguous = json::array();
    json null_count = json::array(), smallest_positive = json::array();
    json dims = json::array(), norms = json::array();
    for (int p = 0; p <= x.top_degree(); ++p) {
        hcx::SpectralData s = hcx::spectrum(x, p, jobs);
        hcx::BettiResult b = hcx::betti(s, eps_null);
        betti.push_back(b.value);
        eps.push_back(b.eps_null);
        ambiguous.push_back(b.ambiguous);
        null_count.push_back(b.null_count);
        smallest_positive.push_back(num_or_null(b.smallest_positive));
        dims.push_back(hmod::dim_tau(x.modules[p]));
        norms.push_back(s.laplacian_norm);
    }
    return json{{"betti", betti},
                {"eps_null", eps},
                {"ambiguous", ambiguous},
                {"null_count", null_count},
                {"smallest_positive", smallest_positive},
                {"dim_tau", dims},
                {"laplacian_norm", norms},
                {"euler_characteristic", hcx::euler_characteristic(x)}};
}

int run(int argc, char** argv) {
    CLI::App app{"Hodge-theoretic computations over finite von Neumann algebras"};
    app.require_subcommand(1);

    CommonOpts o;
    double eps_null = -1.0;
    double lambda = 0.0;
    double gap_tol = trunc::kDefaultGapTol;
    double tie_tol = trunc::kDefaultTieTol;
    double eps_hom = -1.0;
    double trunc_eps_d2 = 1e-9;
    double split = wit::kDefaultSplit;
    int degree = 0;
    int fit_samples = 33;
    int farber_k = 1;
    std::string lambda_grid, t_grid = "1:10:10:lin", fit_window;

    auto* validate = app.add_subcommand("validate", "parse a document and run all checks");
    add_common(validate, o);

    auto* dim = app.add_subcommand("dim", "von Neumann dimensions");
    add_common(dim, o);

    auto* betti = app.add_subcommand("betti", "L2 Betti numbers of the document's complex");
    add_common(betti, o);
    betti->add_option("--eps-null", eps_null, "kernel threshold (default 1e-8 (1+|Delta|))");

    auto* density = app.add_subcommand("density", "spectral distribution function samples");
    add_common(density, o);
    density->add_option("--degree", degree, "cochain degree")->check(CLI::NonNegativeNumber);
    density->add_option("--lambda-grid", lambda_grid, "sample grid lo:hi:steps[:log|lin]")
        ->required();
    density->add_option("--fit-window", fit_window, "power-law fit window lo:hi");
    density->add_option("--fit-samples", fit_samples, "samples for the fit");

    auto* truncate = app.add_subcommand("truncate", "spectral truncation with certificate");
    add_common(truncate, o);
    truncate->add_option("--lambda", lambda, "spectral cutoff")->required();
    truncate->add_option("--eps-null", eps_null, "kernel threshold for Betti comparison");
    truncate->add_option("--gap-tol", gap_tol, "required spectral gap above the cutoff");
    truncate->add_option("--tie-tol", tie_tol, "eigenvalues this close to the cutoff are ties");
    truncate->add_option("--eps-hom", eps_hom, "certificate threshold (default scales with |d||G|)");
    truncate->add_option("--trunc-eps-d2", trunc_eps_d2, "d.d tolerance for the truncated complex");

    auto* witten = app.add_subcommand("witten", "Witten deformation gap scan");
    add_common(witten, o);
    witten->add_option("--t-grid", t_grid, "deformation parameter grid lo:hi:steps[:log|lin]");
    witten->add_option("--split", split, "small/large eigenvalue split");

    auto* compare = app.add_subcommand("compare", "coarse vs barycentric subdivision invariants");
    add_common(compare, o);
    compare->add_option("--eps-null", eps_null, "kernel threshold");
    compare->add_option("--fit-window", fit_window, "density fit window lo:hi (per degree)");
    compare->add_option("--fit-samples", fit_samples, "samples for the fits");

    auto* farber = app.add_subcommand("farber", "the staircase module at truncation level K");
    farber->add_option("--K", farber_k, "truncation level")->required()->check(CLI::PositiveNumber);
    farber->add_option("--out", o.out, "write the report here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    if (validate->parsed()) {
        io::Document doc = io::load_document(o.file, o.parse_options());
        json checks = json::array();
        if (doc.cw && doc.bundle) {
            flatcw::assemble_cochain_complex(*doc.cw, *doc.bundle, o.eps_d2);
            checks.push_back("assembled cochain complex, d.d within tolerance");
        }
        if (doc.complex) checks.push_back("complex differentials compose to zero within tolerance");
        if (doc.bundle) checks.push_back("monodromy invertible, relations hold");
        if (doc.cw && doc.morse) {
            wit::validate_morse(*doc.cw, *doc.morse);
            checks.push_back("discrete Morse function admissible");
        }
        if (doc.cocycle) {
            flatcw::bundle_from_cocycle(*doc.cocycle, o.relation_tol);
            checks.push_back("cocycle identities hold, nerve bundle constructed");
        }
        emit_json(json{{"ok", true},
                       {"schema_version", doc.schema_version},
                       {"sections", doc.sections},
                       {"checks", checks}},
                  o.out);
        return 0;
    }

    if (dim->parsed()) {
        io::Document doc = io::load_document(o.file, o.parse_options());
        json report;
        if (doc.module) {
            hmod::GenerationReport g = hmod::check_finitely_generated(*doc.module);
            report = json{{"kind", "module"},
                          {"dim_tau", hmod::dim_tau(*doc.module)},
                          {"fiber_dim", doc.module->fiber_dim()},
                          {"finitely_generated", g.finitely_generated},
                          {"sup_ratio", g.sup_ratio},
                          {"min_generators", g.min_generators}};
        } else {
            io::ResolvedComplex rc = io::resolve_complex(doc, o.eps_d2);
            json dims = json::array();
            for (const auto& m : rc.complex.modules) dims.push_back(hmod::dim_tau(m));
            report = json{{"kind", "complex"},
                          {"dim_tau", dims},
                          {"euler_characteristic", hcx::euler_characteristic(rc.complex)}};
        }
        emit_json(report, o.out);
        return 0;
    }

    if (betti->parsed()) {
        io::Document doc = io::load_document(o.file, o.parse_options());
        io::ResolvedComplex rc = io::resolve_complex(doc, o.eps_d2);
        emit_json(betti_section(rc.complex, eps_null, o.jobs), o.out);
        return 0;
    }

    if (density->parsed()) {
        io::Document doc = io::load_document(o.file, o.parse_options());
        io::ResolvedComplex rc = io::resolve_complex(doc, o.eps_d2);
        if (degree > rc.complex.top_degree())
            throw Error(errc::invalid_argument, "degree out of range");
        hcx::SpectralData s = hcx::spectrum(rc.complex, degree, o.jobs);
        hcx::DensityFunction f = hcx::spectral_density(s);
        io::GridSpec grid = io::parse_grid(lambda_grid, true);
        std::vector<double> xs = grid.points();
        if (o.format == "csv") {
            std::string csv = "lambda,F,tie\n";
            for (double x : xs) {
                csv += io::format_double(x) + "," + io::format_double(f(x)) + "," +
                       (f.near_tie(x) ? "1" : "0") + "\n";
            }
            write_output(csv, o.out);
            return 0;
        }
        json samples = json::array();
        for (double x : xs)
            samples.push_back(json{{"lambda", x}, {"F", f(x)}, {"tie", f.near_tie(x)}});
        json report{{"degree", degree},
                    {"dim_tau", f.total},
                    {"F0", f(0.0)},
                    {"samples", samples}};
        if (!fit_window.empty()) {
            auto [lo, hi] = parse_window(fit_window);
            hcx::PowerFit fit = hcx::ns_exponent(f, lo, hi, fit_samples);
            report["fit"] = json{{"exponent", fit.exponent},
                                 {"log_c", fit.log_c},
                                 {"r2", fit.r2},
                                 {"points", fit.points}};
        }
        emit_json(report, o.out);
        return 0;
    }

    if (truncate->parsed()) {
        io::Document doc = io::load_document(o.file, o.parse_options());
        io::ResolvedComplex rc = io::resolve_complex(doc, o.eps_d2);
        trunc::TruncateOptions topt;
        topt.gap_tol = gap_tol;
        topt.tie_tol = tie_tol;
        topt.eps_d2 = trunc_eps_d2;
        topt.jobs = o.jobs;
        trunc::TruncatedComplex t = trunc::truncate(rc.complex, lambda, topt);
        trunc::HomotopyCertificate cert =
            trunc::homotopy_certificate(rc.complex, t, eps_hom, gap_tol);
        int P = rc.complex.top_degree();
        json dims_small = json::array(), f_at_lambda = json::array();
        json betti_full = json::array(), betti_small = json::array(), d_norms = json::array();
        bool dims_match = true, norms_ok = true;
        double max_betti_diff = 0.0;
        double bound = trunc::truncated_norm_bound(lambda);
        for (int p = 0; p <= P; ++p) {
            double ds = hmod::dim_tau(t.small.modules[p]);
            double fl = hcx::spectral_density(t.spectra[p])(lambda);
            dims_small.push_back(ds);
            f_at_lambda.push_back(fl);
            if (ds != fl) dims_match = false;
            hcx::BettiResult bf = hcx::betti(t.spectra[p], eps_null);
            hcx::BettiResult bs = hcx::betti(hcx::spectrum(t.small, p, o.jobs), eps_null);
            betti_full.push_back(bf.value);
            betti_small.push_back(bs.value);
            max_betti_diff = std::max(max_betti_diff, std::abs(bf.value - bs.value));
            if (p < P) {
                double n = hmod::operator_norm(t.small.differentials[p]);
                d_norms.push_back(n);
                if (n > bound) norms_ok = false;
            }
        }
        emit_json(json{{"lambda", lambda},
                       {"dims_small", dims_small},
                       {"density_at_lambda", f_at_lambda},
                       {"dims_match_density", dims_match},
                       {"d_norms", d_norms},
                       {"d_norm_bound", bound},
                       {"d_norms_ok", norms_ok},
                       {"betti_full", betti_full},
                       {"betti_small", betti_small},
                       {"max_betti_diff", max_betti_diff},
                       {"inclusion_defect", hcx::chain_map_defect(t.inclusion)},
                       {"compression_defect", hcx::chain_map_defect(t.compression)},
                       {"certificate",
                        json{{"residual", cert.residual},
                             {"eps_hom", cert.eps_hom},
                             {"valid", cert.valid},
                             {"d_norm", cert.d_norm},
                             {"green_norm", cert.green_norm}}}},
                  o.out);
        return 0;
    }

    if (witten->parsed()) {
        io::Document doc = io::load_document(o.file, o.parse_options());
        if (!doc.cw || !doc.bundle || !doc.morse)
            throw Error(errc::parse_error, "witten needs cw, bundle/model and morse sections");
        flatcw::AssembledComplex a =
            flatcw::assemble_cochain_complex(*doc.cw, *doc.bundle, o.eps_d2);
        io::GridSpec grid = io::parse_grid(t_grid, false);
        wit::GapReport rep = wit::gap_scan(a, *doc.cw, *doc.morse, doc.bundle->fiber,
                                           grid.points(), split, o.jobs);
        json entries = json::array();
        for (const auto& e : rep.entries) {
            entries.push_back(json{{"t", e.t},
                                   {"small_count", e.small_count},
                                   {"small_count_raw", e.small_count_raw},
                                   {"max_small", e.max_small},
                                   {"min_large", num_or_null(e.min_large)},
                                   {"ratio", num_or_null(e.ratio)}});
        }
        json crit = json::array();
        for (const auto& cells : wit::critical_cells(*doc.cw, *doc.morse)) crit.push_back(cells);
        emit_json(json{{"split", split},
                       {"morse_dims", rep.morse_dims},
                       {"critical_cells", crit},
                       {"entries", entries},
                       {"decay",
                        json{{"slope", rep.decay_slope},
                             {"r2", rep.decay_r2},
                             {"points", rep.decay_points}}}},
                  o.out);
        return 0;
    }

    if (compare->parsed()) {
        io::Document doc = io::load_document(o.file, o.parse_options());
        if (!doc.cw || !doc.bundle)
            throw Error(errc::parse_error, "compare needs cw and bundle/model sections");
        flatcw::AssembledComplex coarse =
            flatcw::assemble_cochain_complex(*doc.cw, *doc.bundle, o.eps_d2);
        flatcw::Subdivision sub = flatcw::barycentric_subdivide(*doc.cw, doc.bundle->group);
        flatcw::AssembledComplex fine =
            flatcw::assemble_cochain_complex(sub.fine, *doc.bundle, o.eps_d2);
        hcx::ChainMap cmp = flatcw::comparison_chain_map(fine, coarse, sub, *doc.bundle);
        json bc = json::array(), bf = json::array(), cc = json::array(), cf = json::array();
        json slopes_coarse = json::array(), slopes_fine = json::array();
        double max_diff = 0.0;
        double max_slope_diff = 0.0;
        bool have_slopes = false;
        std::optional<std::pair<double, double>> window;
        if (!fit_window.empty()) window = parse_window(fit_window);
        for (int p = 0; p <= coarse.complex.top_degree(); ++p) {
            hcx::SpectralData sc = hcx::spectrum(coarse.complex, p, o.jobs);
            hcx::SpectralData sf = hcx::spectrum(fine.complex, p, o.jobs);
            hcx::BettiResult rbc = hcx::betti(sc, eps_null);
            hcx::BettiResult rbf = hcx::betti(sf, eps_null);
            bc.push_back(rbc.value);
            bf.push_back(rbf.value);
            cc.push_back(coarse.cells[p].size());
            cf.push_back(fine.cells[p].size());
            max_diff = std::max(max_diff, std::abs(rbc.value - rbf.value));
            if (window) {
                auto fit_or_null = [&](const hcx::SpectralData& s) -> json {
                    try {
                        hcx::PowerFit fit = hcx::ns_exponent(hcx::spectral_density(s),
                                                             window->first, window->second,
                                                             fit_samples);
                        return fit.exponent;
                    } catch (const Error&) {
                        return nullptr;
                    }
                };
                json a = fit_or_null(sc), b = fit_or_null(sf);
                slopes_coarse.push_back(a);
                slopes_fine.push_back(b);
                if (!a.is_null() && !b.is_null()) {
                    have_slopes = true;
                    max_slope_diff = std::max(
                        max_slope_diff, std::abs(a.get<double>() - b.get<double>()));
                }
            }
        }
        json report{{"betti_coarse", bc},
                    {"betti_fine", bf},
                    {"max_betti_diff", max_diff},
                    {"chain_map_defect", hcx::chain_map_defect(cmp)},
                    {"cells_coarse", cc},
                    {"cells_fine", cf}};
        if (window) {
            report["slopes_coarse"] = slopes_coarse;
            report["slopes_fine"] = slopes_fine;
            report["max_slope_diff"] = have_slopes ? json(max_slope_diff) : json(nullptr);
        }
        emit_json(report, o.out);
        return 0;
    }

    if (farber->parsed()) {
        hmod::HilbertModule m = hmod::farber_example(farber_k);
        hmod::GenerationReport g = hmod::check_finitely_generated(m);
        emit_json(json{{"K", farber_k},
                       {"dim_tau", hmod::dim_tau(m)},
                       {"fiber_dim", m.fiber_dim()},
                       {"sup_ratio", g.sup_ratio},
                       {"min_generators", g.min_generators}},
                  o.out);
        return 0;
    }

    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const l2hodge::Error& e) {
        json err{{"error",
                  json{{"code", e.code_name()},
                       {"kind", e.kind() == l2hodge::error_kind::validation ? "validation"
                                                                            : "numerical"},
                       {"message", e.what()}}}};
        std::fputs((err.dump(2) + "\n").c_str(), stdout);
        return e.kind() == l2hodge::error_kind::validation ? 2 : 3;
    } catch (const std::exception& e) {
        json err{{"error",
                  json{{"code", "Internal"}, {"kind", "validation"}, {"message", e.what()}}}};
        std::fputs((err.dump(2) + "\n").c_str(), stdout);
        return 2;
    }
}
