#include "sturmian/cli.hpp"

#include "sturmian/analysis.hpp"
#include "sturmian/io.hpp"
#include "sturmian/parallel.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace sturmian::cli {

namespace {

class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Flat JSON object whose keys mirror the long flag names.
class JsonConfig : public CLI::Config {
public:
    std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}\n"; }

    std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
        nlohmann::json doc;
        try {
            in >> doc;
        } catch (const nlohmann::json::exception& e) {
            throw CLI::ConversionError("config: " + std::string(e.what()));
        }
        if (!doc.is_object()) throw CLI::ConversionError("config: top level must be an object");
        std::vector<CLI::ConfigItem> items;
        for (const auto& [key, value] : doc.items()) {
            CLI::ConfigItem item;
            item.name = key;
            if (value.is_array()) {
                for (const auto& v : value) item.inputs.push_back(scalar(v));
            } else {
                item.inputs.push_back(scalar(value));
            }
            items.push_back(std::move(item));
        }
        return items;
    }

private:
    static std::string scalar(const nlohmann::json& v) {
        if (v.is_string()) return v.get<std::string>();
        if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
        if (v.is_number_float()) return io::format_double(v.get<double>());
        if (v.is_number()) return v.dump();
        throw CLI::ConversionError("config: unsupported value " + v.dump());
    }
};

struct RunConfig {
    std::string theta{"fib"};
    std::int64_t q_max{987};
    std::optional<std::int64_t> q;
    std::string model{"smoothed"};
    double epsilon{0.1};
    std::string ham{"normalized"};
    std::optional<double> phi;
    std::size_t grid{128};
    std::size_t flow_grid{512};
    std::size_t t_per_flip{2};
    std::optional<std::size_t> shifts;
    double min_width{0.01};
    std::size_t max_gaps{6};
    double tol{1e-10};
    std::string out;
    std::string svg;
    std::string json;
    std::string in;
    std::string kind{"bulk"};
    std::size_t threads{0};
};

struct Setup {
    CutProjectParams params;
    Model model;
    OperatorSpec spec;
    AnalysisTolerances tol;
    std::size_t threads;
};

double parse_theta(const std::string& text) {
    if (text == "fib" || text == "(3-sqrt5)/2" || text == "(3-sqrt(5))/2") {
        return (3.0 - std::sqrt(5.0)) / 2.0;
    }
    try {
        return io::parse_double(text);
    } catch (const std::exception&) {
        throw UsageError("--theta: expected 'fib', '(3-sqrt5)/2' or a decimal, got '" + text + "'");
    }
}

Setup make_setup(const RunConfig& c, std::ostream& err) {
    const double theta = parse_theta(c.theta);
    if (!(theta > 0.0 && theta < 1.0)) throw UsageError("--theta must lie in (0,1)");
    if (!(c.tol > 0.0)) throw UsageError("--tol must be positive");
    if (!(c.epsilon > 0.0)) throw UsageError("--epsilon must be positive");
    if (!(c.min_width > 0.0)) throw UsageError("--min-width must be positive");
    if (c.q && *c.q > c.q_max) throw UsageError("--q exceeds --q-max");
    try {
        (void)CutProjectParams::irrational(theta);
    } catch (const std::invalid_argument& e) {
        err << "warning: " << e.what() << '\n';
    }
    const Approximant ap = continued_fraction_approximant(theta, c.q ? *c.q : c.q_max);
    if (c.q && ap.q != *c.q) {
        throw UsageError("--q " + std::to_string(*c.q) + " is not a convergent denominator of theta "
                         "(nearest below is " + std::to_string(ap.q) + ")");
    }
    if (ap.q < 3) throw UsageError("approximant " + std::to_string(ap.p) + "/" + std::to_string(ap.q) +
                                   " is too small; raise --q-max");
    const CutProjectParams params = CutProjectParams::approximant(ap.p, ap.q);

    ModelKind kind;
    try {
        kind = parse_model_kind(c.model);
    } catch (const std::invalid_argument& e) {
        throw UsageError(std::string("--model: ") + e.what());
    }
    Model model = kind == ModelKind::Sturmian    ? Model::sturmian(params)
                  : kind == ModelKind::Augmented ? Model::augmented(params)
                                                 : Model::smoothed(params, c.epsilon);
    if (c.phi) {
        if (!(*c.phi >= 0.0 && *c.phi < 1.0)) throw UsageError("--phi must lie in [0,1)");
        model.phi0 = *c.phi;
    }
    OperatorSpec spec;
    if (c.ham == "kohmoto") {
        spec = OperatorSpec::kohmoto(params);
    } else if (c.ham == "normalized") {
        spec = OperatorSpec::normalized(params);
    } else {
        throw UsageError("--ham must be kohmoto or normalized");
    }
    AnalysisTolerances tol;
    tol.tol_spec = c.tol;
    return {params, model, spec, tol, worker_count(c.threads)};
}

// Writes to the named file, or to the fallback stream when the name is empty.
template <class F>
void emit(const std::string& path, std::ostream& fallback, F&& write) {
    if (path.empty()) {
        write(fallback);
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw UsageError("cannot open '" + path + "' for writing");
    write(f);
    if (!f) throw std::runtime_error("write to '" + path + "' failed");
}

const char* side_color(Side s) {
    switch (s) {
        case Side::Left: return "#d62728";
        case Side::Right: return "#1f77b4";
        case Side::Unknown: return "#7f7f7f";
    }
    return "#000000";
}

std::vector<io::ScatterSeries> side_legend() {
    return {{"left", side_color(Side::Left)},
            {"right", side_color(Side::Right)},
            {"unknown", side_color(Side::Unknown)}};
}

std::string describe(const Setup& s) {
    std::ostringstream os;
    os << "theta=" << s.params.numerator() << '/' << s.params.period() << " model=" << to_string(s.model.kind);
    if (s.model.kind == ModelKind::Smoothed) os << " epsilon=" << io::format_double(s.model.epsilon);
    return os.str();
}

struct GapSelection {
    std::vector<Gap> all;
    std::vector<std::size_t> ids;  // indices into all
};

GapSelection select_gaps(const Setup& s, const RunConfig& c, bool with_orientation) {
    const BulkSpectrum bulk = bulk_spectrum(s.model, s.spec, c.grid, s.tol, s.threads);
    GapSelection sel;
    sel.all = find_gaps(bulk, c.min_width);
    label_gaps(sel.all, s.params, s.tol.m_max);
    sel.ids = prominent_gaps(sel.all, c.max_gaps);
    if (with_orientation) {
        for (std::size_t i = 0; i < sel.all.size(); ++i) {
            const auto& l = sel.all[i].label;
            if (l && l->reliable && l->n == 0 && l->m == 1 &&
                std::find(sel.ids.begin(), sel.ids.end(), i) == sel.ids.end()) {
                sel.ids.push_back(i);
                std::sort(sel.ids.begin(), sel.ids.end());
                break;
            }
        }
    }
    return sel;
}

std::vector<Gap> pick(const GapSelection& sel) {
    std::vector<Gap> out;
    for (std::size_t i : sel.ids) out.push_back(sel.all[i]);
    return out;
}

// ------------------------------ subcommands ---------------------------------

int cmd_bulk(const RunConfig& c, std::ostream& out, std::ostream& err) {
    const Setup s = make_setup(c, err);
    if (c.grid == 0) throw UsageError("--grid must be >= 1");
    const BulkSpectrum bulk = bulk_spectrum(s.model, s.spec, c.grid, s.tol, s.threads);
    emit(c.out, out, [&](std::ostream& o) {
        o << "param,eigenvalue\n";
        for (const BulkSample& smp : bulk.samples) {
            for (double e : smp.eigenvalues) {
                o << io::format_double(smp.param) << ',' << io::format_double(e) << '\n';
            }
        }
    });
    if (!c.svg.empty()) {
        io::ScatterPlot plot{"bulk spectrum, " + describe(s), "energy",
                             s.model.kind == ModelKind::Augmented ? "t" : "phi", {}, {}};
        for (const BulkSample& smp : bulk.samples) {
            for (double e : smp.eigenvalues) plot.points.push_back({e, smp.param, "#000000"});
        }
        emit(c.svg, out, [&](std::ostream& o) { io::write_svg(o, plot); });
    }
    return ok;
}

int cmd_edge(const RunConfig& c, std::ostream& out, std::ostream& err) {
    const std::size_t shifts = c.shifts.value_or(1000);
    if (shifts == 0) throw UsageError("--shifts must be >= 1");
    const Setup s = make_setup(c, err);
    const GapSelection sel = select_gaps(s, c, false);
    const std::vector<Gap> gaps = pick(sel);
    const std::vector<FlowPoint> points = boundary_sweep(s.model, s.spec, gaps, shifts, s.tol, s.threads);
    emit(c.out, out, [&](std::ostream& o) { write_flow_csv(o, points); });

    nlohmann::ordered_json report = nlohmann::ordered_json::array();
    for (std::size_t g = 0; g < gaps.size(); ++g) {
        std::vector<FlowPoint> mine;
        std::map<std::int64_t, int> per_shift;
        for (const FlowPoint& p : points) {
            if (p.gap_id != static_cast<int>(g)) continue;
            mine.push_back(p);
            ++per_shift[p.shift];
        }
        int max_states = 0;
        for (const auto& [shift, n] : per_shift) max_states = std::max(max_states, n);
        const double coverage = gap_coverage(mine, gaps[g], gaps[g].width() / 200.0);
        nlohmann::ordered_json row;
        row["gap_id"] = sel.ids[g];
        row["E0"] = gaps[g].E0;
        row["E1"] = gaps[g].E1;
        row["n"] = gaps[g].label->n;
        row["m"] = gaps[g].label->m;
        row["coverage"] = coverage;
        row["max_states_per_shift"] = max_states;
        report.push_back(row);
        err << "gap " << sel.ids[g] << " (" << io::format_double(gaps[g].E0) << ", "
            << io::format_double(gaps[g].E1) << ") m=" << gaps[g].label->m
            << " coverage=" << io::format_double(coverage) << " max_states=" << max_states << '\n';
    }
    if (!c.json.empty()) emit(c.json, out, [&](std::ostream& o) { o << report.dump(2) << '\n'; });
    if (!c.svg.empty()) {
        io::ScatterPlot plot{"Dirichlet in-gap spectrum, " + describe(s), "phi", "energy", {}, side_legend()};
        for (const FlowPoint& p : points) plot.points.push_back({p.param, p.energy, side_color(p.side)});
        emit(c.svg, out, [&](std::ostream& o) { io::write_svg(o, plot); });
    }
    return ok;
}

FlowOptions flow_options(const RunConfig& c, const Setup& s) {
    if (c.flow_grid < 2) throw UsageError("--flow-grid must be >= 2");
    if (c.t_per_flip < 1) throw UsageError("--t-per-flip must be >= 1");
    return {c.flow_grid, c.t_per_flip, s.threads};
}

void refuse_sturmian(const Setup& s) {
    if (s.model.kind == ModelKind::Sturmian) {
        throw IllDefinedFlow(
            "the Sturmian model has no well-defined spectral flow: its Dirichlet eigenvalues jump "
            "at every singular intercept and no winding number can be read off; use --model "
            "smoothed or --model augmented");
    }
}

int cmd_flow(const RunConfig& c, std::ostream& out, std::ostream& err) {
    const Setup s = make_setup(c, err);
    refuse_sturmian(s);
    const GapSelection sel = select_gaps(s, c, true);
    const std::vector<FlowSweep> sweeps = spectral_flow(s.model, s.spec, pick(sel), flow_options(c, s), s.tol);
    std::vector<FlowPoint> all;
    for (std::size_t g = 0; g < sweeps.size(); ++g) {
        for (FlowPoint p : sweeps[g].points) {
            p.gap_id = static_cast<int>(sel.ids[g]);
            all.push_back(p);
        }
        if (sweeps[g].split) err << "warning: gap " << sel.ids[g] << " sweep has unresolved steps\n";
    }
    emit(c.out, out, [&](std::ostream& o) { write_flow_csv(o, all); });
    if (!c.svg.empty()) {
        io::ScatterPlot plot{"spectral flow, " + describe(s), "sweep coordinate", "energy", {}, side_legend()};
        for (const FlowPoint& p : all) plot.points.push_back({p.u, p.energy, side_color(p.side)});
        emit(c.svg, out, [&](std::ostream& o) { io::write_svg(o, plot); });
    }
    return ok;
}

int cmd_labels(const RunConfig& c, std::ostream& out, std::ostream& err) {
    const Setup s = make_setup(c, err);
    const BulkSpectrum bulk = bulk_spectrum(s.model, s.spec, c.grid, s.tol, s.threads);
    std::vector<Gap> gaps = find_gaps(bulk, c.min_width);
    label_gaps(gaps, s.params, s.tol.m_max);
    emit(c.out, out, [&](std::ostream& o) {
        o << "gap_id,E0,E1,width,ids,n,m,residual,reliable\n";
        for (std::size_t i = 0; i < gaps.size(); ++i) {
            const Gap& g = gaps[i];
            o << i << ',' << io::format_double(g.E0) << ',' << io::format_double(g.E1) << ','
              << io::format_double(g.width()) << ',' << io::format_double(g.ids) << ',' << g.label->n
              << ',' << g.label->m << ',' << io::format_double(g.label->residual) << ','
              << (g.label->reliable ? "true" : "false") << '\n';
        }
    });
    return ok;
}

int cmd_winding(const RunConfig& c, std::ostream& out, std::ostream& err) {
    const Setup s = make_setup(c, err);
    refuse_sturmian(s);
    const GapSelection sel = select_gaps(s, c, true);
    const std::vector<Gap> gaps = pick(sel);
    const std::vector<FlowSweep> sweeps = spectral_flow(s.model, s.spec, gaps, flow_options(c, s), s.tol);
    bool under_resolved = false;
    emit(c.out, out, [&](std::ostream& o) {
        o << "gap_id,E0,E1,ids,n,m,w_crossings,w_displacement,displacement_raw\n";
        for (std::size_t g = 0; g < gaps.size(); ++g) {
            const int wc = winding_crossings(sweeps[g].curves, gaps[g]);
            const double raw = displacement_sum(sweeps[g].curves, gaps[g], s.tol.edge_snap);
            std::string wd;
            try {
                wd = std::to_string(winding_displacement(sweeps[g].curves, gaps[g], s.tol.wind_tol,
                                                         s.tol.edge_snap));
            } catch (const UnderResolvedSweep& e) {
                err << "gap " << sel.ids[g] << ": " << e.what() << '\n';
                under_resolved = true;
            }
            o << sel.ids[g] << ',' << io::format_double(gaps[g].E0) << ','
              << io::format_double(gaps[g].E1) << ',' << io::format_double(gaps[g].ids) << ','
              << gaps[g].label->n << ',' << gaps[g].label->m << ',' << wc << ',' << wd << ','
              << io::format_double(raw) << '\n';
        }
    });
    return under_resolved ? numerical_failure : ok;
}

int cmd_verify(const RunConfig& c, std::ostream& out, std::ostream& err) {
    const Setup s = make_setup(c, err);
    refuse_sturmian(s);
    if (c.grid == 0) throw UsageError("--grid must be >= 1");
    VerifyOptions options;
    options.min_width = c.min_width;
    options.max_gaps = c.max_gaps;
    options.bulk_grid = c.grid;
    options.flow = flow_options(c, s);
    options.tol = s.tol;
    const CorrespondenceReport report = verify_correspondence(s.model, s.spec, c.ham, options);
    const std::string path = !c.out.empty() ? c.out : c.json;
    emit(path, out, [&](std::ostream& o) { write_report_json(o, report); });
    for (const GapReport& g : report.gaps) {
        err << "gap " << g.gap_id << " m=" << (g.gap.label ? g.gap.label->m : 0)
            << " w_crossings=" << g.w_crossings << " w_displacement="
            << (g.w_displacement ? std::to_string(*g.w_displacement) : std::string("n/a"))
            << (g.pass ? " pass" : " FAIL") << '\n';
    }
    if (report.numerical_failure()) return numerical_failure;
    return report.all_pass() ? ok : verification_failure;
}

int cmd_plot(const RunConfig& c, std::ostream& out) {
    if (c.in.empty()) throw UsageError("plot needs --in");
    std::ifstream f(c.in, std::ios::binary);
    if (!f) throw UsageError("cannot read '" + c.in + "'");
    const io::CsvTable table = io::read_csv(f);
    io::ScatterPlot plot;
    if (c.kind == "bulk") {
        plot = {"bulk spectrum", "energy", "param", {}, {}};
        if (!table.rows.empty()) {
            const std::size_t x = table.column("eigenvalue"), y = table.column("param");
            for (const auto& r : table.rows) {
                plot.points.push_back({io::parse_double(r[x]), io::parse_double(r[y]), "#000000"});
            }
        }
    } else if (c.kind == "edge" || c.kind == "flow") {
        plot = {c.kind == "edge" ? "Dirichlet in-gap spectrum" : "spectral flow",
                c.kind == "edge" ? "param" : "sample", "energy", {}, side_legend()};
        if (!table.rows.empty()) {
            const std::size_t x = table.column(c.kind == "edge" ? "param" : "shift");
            const std::size_t y = table.column("energy"), side = table.column("side");
            for (const auto& r : table.rows) {
                const Side sd = r[side] == "left" ? Side::Left : r[side] == "right" ? Side::Right : Side::Unknown;
                plot.points.push_back({io::parse_double(r[x]), io::parse_double(r[y]), side_color(sd)});
            }
        }
    } else {
        throw UsageError("--kind must be bulk, edge or flow");
    }
    const std::string path = !c.out.empty() ? c.out : c.svg;
    emit(path, out, [&](std::ostream& o) { io::write_svg(o, plot); });
    return ok;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    RunConfig c;
    CLI::App app{"Sturmian and Kohmoto chains: bulk and boundary spectra, gap labels, winding numbers",
                 "sturmian"};
    app.config_formatter(std::make_shared<JsonConfig>());
    app.set_config("--config", "", "JSON file whose keys mirror the long flag names");
    app.fallthrough();
    app.require_subcommand(1);

    app.add_option("--theta", c.theta, "fib, (3-sqrt5)/2 or a decimal in (0,1)")->capture_default_str();
    app.add_option("--q-max", c.q_max, "largest approximant denominator")->capture_default_str()
        ->check(CLI::PositiveNumber);
    app.add_option("--q", c.q, "exact approximant denominator (must be a convergent)");
    app.add_option("--model", c.model, "sturmian, augmented or smoothed")->capture_default_str();
    app.add_option("--epsilon", c.epsilon, "smoothing width")->capture_default_str();
    app.add_option("--ham", c.ham, "kohmoto or normalized")->capture_default_str();
    app.add_option("--phi", c.phi, "intercept of the Sturmian word and origin of boundary sweeps");
    app.add_option("--grid", c.grid, "bulk parameter samples")->capture_default_str();
    app.add_option("--flow-grid", c.flow_grid, "smoothed sweep samples")->capture_default_str();
    app.add_option("--t-per-flip", c.t_per_flip, "augmented sweep samples per flip")->capture_default_str();
    app.add_option("--shifts", c.shifts, "boundary sweep length (default 1000)");
    app.add_option("--min-width", c.min_width, "smallest gap width reported")->capture_default_str();
    app.add_option("--max-gaps", c.max_gaps, "number of widest gaps analysed")->capture_default_str();
    app.add_option("--tol", c.tol, "eigenvalue tolerance")->capture_default_str();
    app.add_option("--out", c.out, "output file (default stdout)");
    app.add_option("--svg", c.svg, "scatter plot file");
    app.add_option("--json", c.json, "JSON report file");
    app.add_option("--in", c.in, "input CSV for plot");
    app.add_option("--kind", c.kind, "plot kind: bulk, edge or flow")->capture_default_str();
    app.add_option("--threads", c.threads, "worker threads (0: STURMIAN_THREADS or all cores)");

    auto* bulk = app.add_subcommand("bulk", "periodic spectra over the model parameter");
    auto* edge = app.add_subcommand("edge", "Dirichlet in-gap spectra of cyclic shifts");
    auto* flow = app.add_subcommand("flow", "spectral flow of Dirichlet in-gap eigenvalues");
    auto* labels = app.add_subcommand("labels", "gaps with their IDS labels (n, m)");
    auto* winding = app.add_subcommand("winding", "winding numbers of the spectral flow");
    auto* verify = app.add_subcommand("verify", "check winding = -m on the prominent gaps");
    auto* plot = app.add_subcommand("plot", "scatter plot of a CSV written by bulk, edge or flow");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n" << "run with --help for usage\n";
        return usage_error;
    }

    try {
        if (bulk->parsed()) return cmd_bulk(c, out, err);
        if (edge->parsed()) return cmd_edge(c, out, err);
        if (flow->parsed()) return cmd_flow(c, out, err);
        if (labels->parsed()) return cmd_labels(c, out, err);
        if (winding->parsed()) return cmd_winding(c, out, err);
        if (verify->parsed()) return cmd_verify(c, out, err);
        if (plot->parsed()) return cmd_plot(c, out);
    } catch (const SingularInterceptError& e) {
        err << "error: " << e.what() << '\n';
        return usage_error;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return usage_error;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return numerical_failure;
    }
    return usage_error;
}

}  // namespace sturmian::cli
