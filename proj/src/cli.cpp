#include "scoregeo/cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include "scoregeo/baselines.hpp"
#include "scoregeo/config.hpp"
#include "scoregeo/csv.hpp"
#include "scoregeo/denoiser_net.hpp"
#include "scoregeo/geodesic.hpp"
#include "scoregeo/image.hpp"
#include "scoregeo/mixture.hpp"
#include "scoregeo/oracle.hpp"

namespace scoregeo {

namespace {

namespace fs = std::filesystem;

struct CommonOpts {
    std::string config_path;
    std::string out_dir = "out";
    std::optional<long long> seed;
    std::optional<int> tau;
    std::optional<double> lambda;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "experiment config file")->required();
    cmd->add_option("--out", opts.out_dir, "output directory");
    cmd->add_option("--seed", [&opts](const std::vector<std::string>& v) {
        opts.seed = std::stoll(v[0]);
        return true;
    }, "seed override");
    cmd->add_option("--tau", [&opts](const std::vector<std::string>& v) {
        opts.tau = std::stoi(v[0]);
        return true;
    }, "tau override");
    cmd->add_option("--lambda", [&opts](const std::vector<std::string>& v) {
        opts.lambda = std::stod(v[0]);
        return true;
    }, "geodesic lambda override");
}

// Files named by config keys are config-level concerns; a missing one is a
// config error, not a numerical failure.
std::string read_referenced_file(const std::string& path, const std::string& key) {
    try {
        return read_text_file(path);
    } catch (const std::runtime_error& e) {
        throw config_error(key + ": " + e.what());
    }
}

// Overrides are baked into the resolved config so a rerun from
// resolved.cfg reproduces outputs byte for byte.
KvConfig resolve_config(const CommonOpts& opts) {
    KvConfig cfg = KvConfig::parse_file(opts.config_path);
    if (opts.seed) cfg.set_int("seed", *opts.seed);
    if (opts.tau) cfg.set_int("tau", *opts.tau);
    if (opts.lambda) cfg.set_real("geodesic.lambda", *opts.lambda);
    if (!cfg.has("seed")) cfg.set_int("seed", 0);
    return cfg;
}

Schedule schedule_from(const KvConfig& cfg) {
    const std::string kind = cfg.get_str("schedule.kind", "linear");
    if (kind != "linear") throw config_error("schedule.kind: only 'linear' is supported");
    return make_schedule(cfg.get_int("schedule.T"), cfg.get_real("schedule.beta_min", 1e-4),
                         cfg.get_real("schedule.beta_max", 0.02));
}

MixtureDensity mixture_from(const KvConfig& cfg) {
    const std::string preset = cfg.get_str("mixture.preset", "");
    if (preset == "two_moons")
        return make_two_moons_mixture(cfg.get_int("mixture.two_moons.per_moon", 6),
                                      cfg.get_real("mixture.two_moons.sigma", 0.12));
    if (!preset.empty()) throw config_error("mixture.preset: unknown preset " + preset);
    if (!cfg.has("mixture.k")) throw config_error("config: expected mixture.k or mixture.preset");
    std::ostringstream text;
    text << "mixture.k = " << cfg.get_int("mixture.k") << "\n";
    for (int i = 0; i < cfg.get_int("mixture.k"); ++i) {
        const std::string idx = std::to_string(i);
        text << "mixture.weight." << idx << " = " << cfg.get_str("mixture.weight." + idx) << "\n";
        text << "mixture.mean." << idx << " = " << cfg.get_str("mixture.mean." + idx) << "\n";
        text << "mixture.cov." << idx << " = " << cfg.get_str("mixture.cov." + idx) << "\n";
    }
    try {
        return mixture_from_config(text.str());
    } catch (const std::invalid_argument& e) {
        throw config_error(std::string("mixture config: ") + e.what());
    }
}

std::unique_ptr<ScoreField> field_from(const KvConfig& cfg, const Schedule& schedule) {
    const std::string backend = cfg.get_str("field.backend", "mixture");
    if (backend == "mixture") return std::make_unique<MixtureScoreField>(mixture_from(cfg), schedule);
    if (backend == "trained") {
        const std::string path = cfg.get_str("field.net");
        if (!fs::exists(path)) throw config_error("field.net: file does not exist: " + path);
        return std::make_unique<NetScoreField>(load_net(path), schedule);
    }
    throw config_error("field.backend: expected 'mixture' or 'trained', got " + backend);
}

GeodesicConfig geodesic_from(const KvConfig& cfg) {
    GeodesicConfig gc;
    gc.n_steps = cfg.get_int("geodesic.n", 10);
    const std::string lam = cfg.get_str("geodesic.lambda", "auto");
    gc.lambda = lam == "auto" ? -1.0 : cfg.get_real("geodesic.lambda");
    gc.iters = cfg.get_int("geodesic.iters", 5000);
    gc.lr0 = cfg.get_real("geodesic.lr0", 1e-2);
    const std::string sched = cfg.get_str("geodesic.lr_schedule", "cosine");
    if (sched == "cosine") gc.lr_schedule = GeodesicConfig::LrSchedule::Cosine;
    else if (sched == "constant") gc.lr_schedule = GeodesicConfig::LrSchedule::Constant;
    else throw config_error("geodesic.lr_schedule: expected cosine|constant");
    const std::string init = cfg.get_str("geodesic.init", "slerp");
    if (init == "slerp") gc.init = GeodesicConfig::Init::Slerp;
    else if (init == "lerp") gc.init = GeodesicConfig::Init::Lerp;
    else throw config_error("geodesic.init: expected slerp|lerp");
    gc.seed = cfg.get_u64("seed", 0);
    return gc;
}

std::pair<Sample, Sample> endpoints_from(const KvConfig& cfg) {
    if (cfg.has("endpoints.file")) {
        const auto samples = samples_from_csv(
            read_referenced_file(cfg.get_str("endpoints.file"), "endpoints.file"));
        if (samples.size() < 2) throw config_error("endpoints.file: need at least two rows");
        return {samples.front(), samples.back()};
    }
    if (!cfg.has("endpoints.a") || !cfg.has("endpoints.b"))
        throw config_error("config: expected endpoints.a/endpoints.b or endpoints.file");
    return {Sample{cfg.get_vec("endpoints.a"), 0}, Sample{cfg.get_vec("endpoints.b"), 0}};
}

int tau_from(const KvConfig& cfg, const Schedule& schedule) {
    const int tau = cfg.get_int("tau");
    if (tau < 1 || tau > schedule.T)
        throw config_error("tau must lie in [1, T]; got " + std::to_string(tau));
    return tau;
}

void ensure_outdir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw config_error("cannot create output directory " + dir + ": " + ec.message());
}

void write_manifest(const std::string& out_dir, const std::string& command, const KvConfig& resolved,
                    const std::vector<std::string>& outputs) {
    write_text_file(out_dir + "/resolved.cfg", resolved.canonical_text());
    std::ostringstream m;
    m << "command = " << command << "\n";
    m << "config_hash = " << resolved.hash() << "\n";
    m << "version = " << kVersion << "\n";
    m << "seed = " << resolved.get_str("seed", "0") << "\n";
    std::string list;
    for (const std::string& o : outputs) {
        if (!list.empty()) list += ' ';
        list += o;
    }
    m << "outputs = " << list << "\n";
    write_text_file(out_dir + "/manifest.txt", m.str());
}

// Emits a Figure-1-style horizontal strip when the sample dimension
// matches the declared image shape; CSV only otherwise.
void maybe_write_strip(const KvConfig& cfg, const std::string& out_dir, const std::string& name,
                       const Mat& rows, std::vector<std::string>& outputs) {
    if (!cfg.has("image.h") || !cfg.has("image.w")) return;
    const int h = cfg.get_int("image.h");
    const int w = cfg.get_int("image.w");
    if (static_cast<long>(h) * w != rows.cols()) return;
    const double vmin = cfg.get_real("image.vmin", 0.0);
    const double vmax = cfg.get_real("image.vmax", 1.0);
    const std::string file = "strip_" + name + ".png";
    write_png_gray(out_dir + "/" + file, sample_strip(rows, h, w, vmin, vmax));
    outputs.push_back(file);
}

int cmd_synth_data(const CommonOpts& opts) {
    const KvConfig cfg = resolve_config(opts);
    ensure_outdir(opts.out_dir);
    const std::string kind = cfg.get_str("data.kind", "mixture");
    std::vector<std::string> outputs = {"data.csv"};

    if (kind == "mixture") {
        const MixtureDensity m = mixture_from(cfg);
        const int count = cfg.get_int("data.count", 1000);
        if (count < 0) throw config_error("data.count must be >= 0");
        Rng rng(cfg.get_u64("seed", 0));
        std::vector<Sample> samples;
        samples.reserve(static_cast<size_t>(count));
        for (int i = 0; i < count; ++i) samples.push_back({sample_mixture(m, rng), 0});
        std::string csv;
        if (samples.empty()) {
            csv = "t,s_index";
            for (int i = 1; i <= m.dim(); ++i) csv += ",x_" + std::to_string(i);
            csv += "\n";
        } else {
            csv = samples_to_csv(samples);
        }
        write_text_file(opts.out_dir + "/data.csv", csv);
    } else if (kind == "image_dir") {
        std::istringstream files(cfg.get_str("data.files"));
        std::vector<Sample> samples;
        std::string file;
        int w0 = -1, h0 = -1;
        while (files >> file) {
            int w = 0, h = 0;
            Vec pixels = read_pgm(file, w, h);
            if (w0 < 0) {
                w0 = w;
                h0 = h;
            } else if (w != w0 || h != h0) {
                throw config_error("data.files: image size mismatch in " + file);
            }
            samples.push_back({std::move(pixels), 0});
        }
        if (samples.empty()) throw config_error("data.files: no readable images");
        write_text_file(opts.out_dir + "/data.csv", samples_to_csv(samples));
    } else {
        throw config_error("data.kind: expected mixture|image_dir");
    }
    write_manifest(opts.out_dir, "synth-data", cfg, outputs);
    return 0;
}

int cmd_train(const CommonOpts& opts) {
    const KvConfig cfg = resolve_config(opts);
    ensure_outdir(opts.out_dir);
    const Schedule schedule = schedule_from(cfg);
    const auto data_samples =
        samples_from_csv(read_referenced_file(cfg.get_str("train.data"), "train.data"));
    std::vector<Vec> data;
    data.reserve(data_samples.size());
    for (const Sample& s : data_samples) data.push_back(s.x);
    if (data.empty()) throw config_error("train.data: empty dataset");

    DenoiserNet::Arch arch;
    if (cfg.has("net.hidden")) {
        const Vec widths = cfg.get_vec("net.hidden");
        arch.hidden.clear();
        for (int i = 0; i < widths.size(); ++i) arch.hidden.push_back(static_cast<int>(widths[i]));
    }
    arch.time_emb_dim = cfg.get_int("net.time_emb_dim", 16);

    TrainConfig tc;
    tc.epochs = cfg.get_int("train.epochs", 20);
    tc.steps_per_epoch = cfg.get_int("train.steps", 200);
    tc.batch_size = cfg.get_int("train.batch", 64);
    tc.lr = cfg.get_real("train.lr", 1e-3);
    tc.seed = cfg.get_u64("seed", 0);

    DenoiserNet net(static_cast<int>(data[0].size()), schedule.T, arch, tc.seed);
    const TrainReport report = train_denoiser(net, data, schedule, tc);
    save_net(net, opts.out_dir + "/net.bin");

    std::ostringstream loss_csv;
    loss_csv << "epoch,loss\n";
    for (size_t e = 0; e < report.epoch_loss.size(); ++e)
        loss_csv << e << ',' << format_real(report.epoch_loss[e]) << "\n";
    write_text_file(opts.out_dir + "/train_loss.csv", loss_csv.str());
    write_manifest(opts.out_dir, "train", cfg, {"net.bin", "train_loss.csv"});
    std::cout << "trained " << report.epoch_loss.size() << " epochs";
    if (!report.epoch_loss.empty())
        std::cout << "; first/last loss " << report.epoch_loss.front() << " / " << report.epoch_loss.back();
    std::cout << "\n";
    return 0;
}

int cmd_invert(const CommonOpts& opts) {
    const KvConfig cfg = resolve_config(opts);
    ensure_outdir(opts.out_dir);
    const Schedule schedule = schedule_from(cfg);
    const auto field = field_from(cfg, schedule);
    const int tau = tau_from(cfg, schedule);

    std::vector<Sample> inputs;
    if (cfg.has("invert.input")) {
        inputs = samples_from_csv(read_referenced_file(cfg.get_str("invert.input"), "invert.input"));
    } else {
        const auto [a, b] = endpoints_from(cfg);
        inputs = {a, b};
    }
    std::vector<Sample> inverted;
    inverted.reserve(inputs.size());
    for (const Sample& s : inputs) inverted.push_back(ddim_invert(s, tau, *field, schedule));
    write_text_file(opts.out_dir + "/inverted.csv", samples_to_csv(inverted));
    write_manifest(opts.out_dir, "invert", cfg, {"inverted.csv"});
    return 0;
}

int cmd_interpolate(const CommonOpts& opts) {
    const KvConfig cfg = resolve_config(opts);
    ensure_outdir(opts.out_dir);
    const Schedule schedule = schedule_from(cfg);
    const auto field = field_from(cfg, schedule);
    const int tau = tau_from(cfg, schedule);
    const GeodesicConfig gc = geodesic_from(cfg);
    const auto [x0_a, x0_b] = endpoints_from(cfg);

    const Sample a_tau = ddim_invert(x0_a, tau, *field, schedule);
    const Sample b_tau = ddim_invert(x0_b, tau, *field, schedule);
    const InterpolationRequest req{a_tau.x, b_tau.x, gc.n_steps, tau};

    std::vector<std::string> outputs;
    struct MethodRun {
        std::string name;
        Path tau_path;
    };
    std::vector<MethodRun> runs;
    runs.push_back({"lerp", lerp(req)});
    runs.push_back({"slerp", slerp(req)});
    const GeodesicResult geo = geodesic_optimize(*field, a_tau.x, b_tau.x, tau, gc);
    runs.push_back({"geodesic", geo.path});
    write_text_file(opts.out_dir + "/trace_geodesic.csv", trace_to_csv(geo.trace));
    outputs.push_back("trace_geodesic.csv");

    for (const MethodRun& run : runs) {
        write_text_file(opts.out_dir + "/tau_path_" + run.name + ".csv", path_to_csv(run.tau_path));
        outputs.push_back("tau_path_" + run.name + ".csv");
        std::vector<Sample> generated;
        generated.reserve(static_cast<size_t>(gc.n_steps) + 1);
        for (int i = 0; i <= gc.n_steps; ++i) {
            const Sample at_tau{run.tau_path.points.row(i).transpose(), tau};
            generated.push_back(ddim_generate(at_tau, *field, schedule));
        }
        write_text_file(opts.out_dir + "/path_" + run.name + ".csv", samples_to_csv(generated));
        outputs.push_back("path_" + run.name + ".csv");

        // Figure layout: originals at both ends, reconstructions adjacent.
        Mat strip_rows(gc.n_steps + 3, x0_a.dim());
        strip_rows.row(0) = x0_a.x.transpose();
        for (int i = 0; i <= gc.n_steps; ++i) strip_rows.row(i + 1) = generated[static_cast<size_t>(i)].x.transpose();
        strip_rows.row(gc.n_steps + 2) = x0_b.x.transpose();
        maybe_write_strip(cfg, opts.out_dir, run.name, strip_rows, outputs);
    }
    if (geo.aborted) std::cerr << "warning: geodesic optimizer aborted: " << geo.diagnostic << "\n";
    write_manifest(opts.out_dir, "interpolate", cfg, outputs);
    return 0;
}

int cmd_evaluate(const CommonOpts& opts) {
    const KvConfig cfg = resolve_config(opts);
    ensure_outdir(opts.out_dir);
    const Schedule schedule = schedule_from(cfg);
    const auto field = field_from(cfg, schedule);
    const int tau = tau_from(cfg, schedule);
    const GeodesicConfig gc = geodesic_from(cfg);
    const auto [x0_a, x0_b] = endpoints_from(cfg);

    std::optional<MixtureDensity> reference;
    if (cfg.get_str("field.backend", "mixture") == "trained") reference = mixture_from(cfg);
    const EvalReport report = compare_methods(*field, schedule, x0_a, x0_b, tau, gc,
                                              reference ? &*reference : nullptr);
    write_text_file(opts.out_dir + "/report.csv", eval_report_csv(report));
    write_manifest(opts.out_dir, "evaluate", cfg, {"report.csv"});
    return 0;
}

int cmd_oracle(const CommonOpts& opts) {
    const KvConfig cfg = resolve_config(opts);
    ensure_outdir(opts.out_dir);
    const Schedule schedule = schedule_from(cfg);
    const auto field = field_from(cfg, schedule);
    const int t = cfg.get_int("tau", 0); // oracle may run at t=0 for mixture fields
    const GeodesicConfig gc = geodesic_from(cfg);

    GridGraphSpec spec;
    spec.lo = cfg.get_vec("oracle.lo");
    spec.hi = cfg.get_vec("oracle.hi");
    spec.nx = cfg.get_int("oracle.nx", 256);
    spec.ny = cfg.get_int("oracle.ny", 256);

    // Endpoints live directly in the t-space here; no inversion.
    const Vec a = cfg.get_vec("endpoints.a");
    const Vec b = cfg.get_vec("endpoints.b");
    const DijkstraResult dj = dijkstra_geodesic(*field, spec, a, b, t);
    const GeodesicResult geo = geodesic_optimize(*field, a, b, t, gc);
    const LengthReport geo_len = curve_length(*field, geo.path);
    const LengthReport lerp_len = curve_length(*field, lerp({a, b, gc.n_steps, t}));

    Path polyline;
    polyline.t = t;
    polyline.points = dj.polyline;
    write_text_file(opts.out_dir + "/oracle_polyline.csv", path_to_csv(polyline));
    std::ostringstream summary;
    summary << "method,length\n";
    summary << "dijkstra," << format_real(dj.length) << "\n";
    summary << "geodesic," << format_real(geo_len.total_length) << "\n";
    summary << "lerp," << format_real(lerp_len.total_length) << "\n";
    write_text_file(opts.out_dir + "/oracle_summary.csv", summary.str());
    write_manifest(opts.out_dir, "oracle", cfg, {"oracle_polyline.csv", "oracle_summary.csv"});
    std::cout << "dijkstra length " << dj.length << ", geodesic length " << geo_len.total_length << "\n";
    return 0;
}

} // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"score-metric geodesic interpolation for diffusion models"};
    app.require_subcommand(1);

    CommonOpts opts;
    CLI::App* synth = app.add_subcommand("synth-data", "sample a mixture (or pack images) into the sample CSV format");
    CLI::App* train = app.add_subcommand("train", "train the denoiser network on a sample CSV");
    CLI::App* invert = app.add_subcommand("invert", "DDIM-invert samples from t=0 to tau");
    CLI::App* interpolate = app.add_subcommand("interpolate", "run the full interpolation pipeline");
    CLI::App* evaluate = app.add_subcommand("evaluate", "compare lerp/slerp/geodesic and write the report CSV");
    CLI::App* oracle = app.add_subcommand("oracle", "grid-Dijkstra shortest path vs optimized geodesic");
    for (CLI::App* cmd : {synth, train, invert, interpolate, evaluate, oracle}) add_common(cmd, opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const std::exception& e) { // malformed numeric flags
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (synth->parsed()) return cmd_synth_data(opts);
        if (train->parsed()) return cmd_train(opts);
        if (invert->parsed()) return cmd_invert(opts);
        if (interpolate->parsed()) return cmd_interpolate(opts);
        if (evaluate->parsed()) return cmd_evaluate(opts);
        if (oracle->parsed()) return cmd_oracle(opts);
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const numerical_error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 2;
}

int run_cli(const std::vector<std::string>& args) {
    std::vector<std::string> full = {"scoregeo"};
    full.insert(full.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    argv.reserve(full.size());
    for (const std::string& s : full) argv.push_back(s.c_str());
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

} // namespace scoregeo
