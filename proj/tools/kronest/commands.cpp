#include "commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <limits>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "kronest/dataset_io.hpp"
#include "kronest/metrics.hpp"
#include "kronest/parallel.hpp"

namespace kronest::cli {

namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct CommonOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::optional<int> threads;
    bool force = false;
};

std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

ExperimentConfig resolve_config(const CommonOptions& opt) {
    ExperimentConfig cfg = opt.config.empty() ? default_config() : load_config(opt.config);
    if (opt.seed) cfg.seed = *opt.seed;
    if (opt.force) cfg.solver.force = true;
    if (!opt.out.empty()) cfg.output = opt.out;
    cfg.propagate();
    cfg.validate();
    return cfg;
}

fs::path ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());
    return fs::path(dir);
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write '" + path.string() + "'");
    return f;
}

void write_json(const fs::path& path, const Json& j) {
    auto f = open_out(path);
    f << j.dump(2) << '\n';
    if (!f) throw IoError("failed writing '" + path.string() + "'");
}

std::string file_digest(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read '" + path.string() + "'");
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return fnv1a_hex(bytes);
}

/// Digest of the ground-truth factors' raw float64 bytes, then the noise power.
std::string truth_digest(const SampleSet& s) {
    std::string bytes;
    auto put = [&](double v) { bytes.append(reinterpret_cast<const char*>(&v), sizeof v); };
    if (s.truth) {
        for (const Matrix* m : {&s.truth->st, &s.truth->p}) {
            for (Index i = 0; i < m->rows(); ++i) {
                for (Index j = 0; j < m->cols(); ++j) {
                    put((*m)(i, j).real());
                    put((*m)(i, j).imag());
                }
            }
        }
    }
    put(s.noise_power);
    return fnv1a_hex(bytes);
}

/// Radar geometry for a dataset: the config's when its shape matches, else a
/// single-channel array with N_st pulses.
RadarParams radar_for(const SampleSet& s, const ExperimentConfig& cfg, bool have_config) {
    if (have_config) {
        const RadarParams& r = cfg.scene.radar;
        if (r.n_st() != s.n_st || r.n_p != s.n_p) {
            throw ConfigError("config radar shape (N_st=" + std::to_string(r.n_st()) +
                              ", N_p=" + std::to_string(r.n_p) + ") does not match the dataset (N_st=" +
                              std::to_string(s.n_st) + ", N_p=" + std::to_string(s.n_p) + ")");
        }
        return r;
    }
    RadarParams r;
    r.n_s = 1;
    r.n_t = static_cast<int>(s.n_st);
    r.n_p = static_cast<int>(s.n_p);
    return r;
}

Json matrix_json(const Matrix& m) {
    Json rows = Json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Index j = 0; j < m.cols(); ++j) row.push_back({m(i, j).real(), m(i, j).imag()});
        rows.push_back(row);
    }
    return rows;
}

Json rho_json(const ShrinkageFactors& f) {
    return {{"rho_st", f.st},           {"rho_p", f.p},
            {"method", to_string(f.method)}, {"raised_st", f.raised_st},
            {"raised_p", f.raised_p},   {"degenerate", f.degenerate}};
}

Json cond_json(const CondReport& c) {
    auto num = [](double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); };
    return {{"st", num(c.st)}, {"p", num(c.p)}, {"full", num(c.full)}};
}

Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

// ---------------------------------------------------------------------------
// Monte-Carlo collection shared by the sweep commands.

struct TrialRecord {
    bool ok = false;
    double nmse = kNaN;
    double scnr_loss = kNaN;
    CondReport cond{kNaN, kNaN, kNaN};
    double rho_st = 0.0;
    double rho_p = 0.0;
    double iterations = 0.0;
};

TrialRecord evaluate(const SampleSet& samples, const EstimatorSpec& spec, const DataMatrix& target,
                     const KroneckerCov& truth) {
    TrialRecord rec;
    try {
        const Estimate e = estimate(samples, spec);
        rec.nmse = nmse(e.cov, truth);
        rec.scnr_loss = scnr_loss(target, e.cov, truth);
        rec.cond = cond_report(e.cov);
        rec.rho_st = e.rho.st;
        rec.rho_p = e.rho.p;
        rec.iterations = e.iterations;
        rec.ok = true;
    } catch (const NumericalError&) {
        rec.ok = false;
    }
    return rec;
}

struct PointSummary {
    std::string estimator;
    SceneConfig scene;
    double axis_value = 0.0;
    Summary nmse, scnr_loss, cond, cond_st, cond_p, rho_st, rho_p, iterations;
    std::size_t failures = 0;
    std::size_t trials = 0;
};

std::vector<PointSummary> run_point(const ExperimentConfig& cfg, const SceneConfig& scene_cfg,
                                    double axis_value, int threads) {
    const Scene scene(scene_cfg);
    const RadarParams& radar = scene_cfg.radar;
    const DataMatrix target = cfg.target.signature(radar).matrix(radar);
    const std::size_t n_trials = static_cast<std::size_t>(cfg.trials);
    const std::size_t n_est = cfg.estimators.size();

    // Trials share seeds across points, so an L sweep reuses the leading samples.
    std::vector<std::vector<TrialRecord>> records(n_trials);
    parallel_for(
        n_trials,
        [&](std::size_t t) {
            const SampleSet samples =
                scene.sample_set(derive_seed(cfg.seed, t, Stream::trial), scene_cfg.samples);
            std::vector<TrialRecord> row;
            row.reserve(n_est);
            for (const auto& spec : cfg.estimators) {
                row.push_back(evaluate(samples, spec, target, scene.truth()));
            }
            records[t] = std::move(row);
        },
        threads);

    std::vector<PointSummary> out;
    for (std::size_t k = 0; k < n_est; ++k) {
        PointSummary p;
        p.estimator = cfg.estimators[k].label();
        p.scene = scene_cfg;
        p.axis_value = axis_value;
        p.trials = n_trials;
        std::vector<double> nm, sl, cf, cs, cp, rs, rp, it;
        for (const auto& row : records) {
            const TrialRecord& r = row[k];
            if (!r.ok) {
                ++p.failures;
                continue;
            }
            nm.push_back(r.nmse);
            sl.push_back(r.scnr_loss);
            cf.push_back(r.cond.full);
            if (std::isfinite(r.cond.st)) cs.push_back(r.cond.st);
            if (std::isfinite(r.cond.p)) cp.push_back(r.cond.p);
            rs.push_back(r.rho_st);
            rp.push_back(r.rho_p);
            it.push_back(r.iterations);
        }
        p.nmse = summarize(nm);
        p.scnr_loss = summarize(sl);
        p.cond = summarize(cf);
        p.cond_st = cs.empty() ? Summary{kNaN, kNaN, 0} : summarize(cs);
        p.cond_p = cp.empty() ? Summary{kNaN, kNaN, 0} : summarize(cp);
        p.rho_st = summarize(rs);
        p.rho_p = summarize(rp);
        p.iterations = summarize(it);
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<std::pair<double, SceneConfig>> axis_points(const ExperimentConfig& cfg) {
    std::vector<std::pair<double, SceneConfig>> pts;
    const std::string& axis = cfg.sweep.axis;
    if (axis == "none") {
        pts.emplace_back(cfg.scene.samples, cfg.scene);
        return pts;
    }
    for (const double v : cfg.sweep.values) {
        SceneConfig s = cfg.scene;
        if (axis == "L") {
            if (v < 1 || v != std::floor(v)) throw ConfigError("sweep: L values must be positive integers");
            s.samples = static_cast<int>(v);
        } else if (axis == "nu") {
            if (!(v > 0.0)) throw ConfigError("sweep: nu values must be positive");
            s.texture.nu = v;
        } else if (axis == "dim") {
            if (v < 1 || v != std::floor(v)) throw ConfigError("sweep: dim values must be positive integers");
            s.radar.n_s = static_cast<int>(v);
            s.samples = std::max(1, s.radar.n_s * s.radar.n_t / 2);
        }
        s.validate();
        pts.emplace_back(v, s);
    }
    return pts;
}

void write_metric_csvs(const fs::path& dir, const std::string& axis,
                       const std::vector<PointSummary>& pts, const ExperimentConfig& cfg,
                       const std::string& digest, std::vector<std::string>& outputs) {
    const std::string suffix = axis == "none" ? "" : "_vs_" + axis;
    auto geometry = [](const PointSummary& p) {
        return std::to_string(p.scene.samples) + "," + fmt(p.scene.texture.nu) + "," +
               std::to_string(p.scene.radar.n_s) + "," + std::to_string(p.scene.radar.n_t) + "," +
               std::to_string(p.scene.radar.n_p);
    };
    auto tail = [&](const PointSummary& p) {
        return fmt(p.rho_st.mean) + "," + fmt(p.rho_p.mean) + "," + std::to_string(p.failures) + "," +
               std::to_string(p.trials) + "," + std::to_string(cfg.seed) + "," + digest;
    };

    {
        const std::string name = "metrics" + suffix + ".csv";
        auto f = open_out(dir / name);
        f << "estimator,L,nu,nmse_mean,nmse_ci95,scnr_loss_mean,cond_mean,trials,seed,config_digest,"
             "scnr_loss_ci95,cond_ci95,cond_st_mean,cond_p_mean,rho_st_mean,rho_p_mean,"
             "iterations_mean,failures,n_s,n_t,n_p\n";
        for (const auto& p : pts) {
            f << p.estimator << ',' << p.scene.samples << ',' << fmt(p.scene.texture.nu) << ','
              << fmt(p.nmse.mean) << ',' << fmt(p.nmse.ci95) << ',' << fmt(p.scnr_loss.mean) << ','
              << fmt(p.cond.mean) << ',' << p.trials << ',' << cfg.seed << ',' << digest << ','
              << fmt(p.scnr_loss.ci95) << ',' << fmt(p.cond.ci95) << ',' << fmt(p.cond_st.mean)
              << ',' << fmt(p.cond_p.mean) << ',' << fmt(p.rho_st.mean) << ','
              << fmt(p.rho_p.mean) << ',' << fmt(p.iterations.mean) << ',' << p.failures << ','
              << p.scene.radar.n_s << ',' << p.scene.radar.n_t << ',' << p.scene.radar.n_p << '\n';
        }
        outputs.push_back(name);
    }

    struct Family {
        const char* name;
        Summary PointSummary::*field;
    };
    for (const Family fam : {Family{"nmse", &PointSummary::nmse},
                             Family{"scnr_loss", &PointSummary::scnr_loss},
                             Family{"cond", &PointSummary::cond}}) {
        const std::string name = std::string(fam.name) + suffix + ".csv";
        auto f = open_out(dir / name);
        f << "estimator,L,nu,n_s,n_t,n_p," << fam.name << "_mean," << fam.name
          << "_ci95,rho_st_mean,rho_p_mean,failures,trials,seed,config_digest\n";
        for (const auto& p : pts) {
            const Summary& s = p.*(fam.field);
            f << p.estimator << ',' << geometry(p) << ',' << fmt(s.mean) << ',' << fmt(s.ci95) << ','
              << tail(p) << '\n';
        }
        outputs.push_back(name);
    }
}

Json summary_json(const Summary& s) {
    return {{"mean", finite_or_null(s.mean)}, {"ci95", finite_or_null(s.ci95)}, {"n", s.count}};
}

Json manifest_base(const std::string& command, const ExperimentConfig& cfg, const std::string& digest,
                   int threads) {
    return {{"command", command},
            {"config_digest", digest},
            {"seed", cfg.seed},
            {"trials", cfg.trials},
            {"threads", threads},
            {"created_utc", utc_timestamp()},
            {"config", to_json(cfg)}};
}

int metric_sweep(const ExperimentConfig& cfg, int threads, std::ostream& out) {
    const std::string digest = config_digest(cfg);
    const fs::path dir = ensure_dir(cfg.output);
    std::vector<PointSummary> all;
    Json points = Json::array();
    for (const auto& [value, scene] : axis_points(cfg)) {
        auto pts = run_point(cfg, scene, value, threads);
        for (const auto& p : pts) {
            out << cfg.sweep.axis << '=' << fmt(value) << ' ' << p.estimator << " nmse=" << fmt(p.nmse.mean)
                << " +/- " << fmt(p.nmse.ci95) << '\n';
            points.push_back({{"axis_value", value},
                              {"estimator", p.estimator},
                              {"L", p.scene.samples},
                              {"nu", p.scene.texture.nu},
                              {"n_s", p.scene.radar.n_s},
                              {"n_t", p.scene.radar.n_t},
                              {"nmse", summary_json(p.nmse)},
                              {"scnr_loss", summary_json(p.scnr_loss)},
                              {"cond", summary_json(p.cond)},
                              {"rho_st", summary_json(p.rho_st)},
                              {"rho_p", summary_json(p.rho_p)},
                              {"failures", p.failures},
                              {"trial_seed_root", cfg.seed}});
        }
        all.insert(all.end(), std::make_move_iterator(pts.begin()), std::make_move_iterator(pts.end()));
    }
    std::vector<std::string> outputs;
    write_metric_csvs(dir, cfg.sweep.axis, all, cfg, digest, outputs);
    Json manifest = manifest_base("sweep", cfg, digest, threads);
    manifest["axis"] = cfg.sweep.axis;
    manifest["points"] = points;
    manifest["outputs"] = outputs;
    write_json(dir / "manifest.json", manifest);
    return kExitOk;
}

int grid_sweep(const ExperimentConfig& cfg, int threads, std::ostream& out) {
    const std::string digest = config_digest(cfg);
    const fs::path dir = ensure_dir(cfg.output);
    const Scene scene(cfg.scene);
    const std::size_t n_trials = static_cast<std::size_t>(cfg.trials);

    std::vector<SampleSet> trials(n_trials);
    for (std::size_t t = 0; t < n_trials; ++t) {
        trials[t] = scene.sample_set(derive_seed(cfg.seed, t, Stream::trial), cfg.scene.samples);
    }
    OracleConfig oc = cfg.oracle;
    oc.threads = threads;
    const NmseSurface surface = nmse_surface(trials, scene.truth(), oc);

    std::vector<std::string> outputs;
    {
        auto f = open_out(dir / "grid.csv");
        f << "rho_st,rho_p,nmse_mean,trials,seed,config_digest\n";
        for (std::size_t i = 0; i < surface.grid.size(); ++i) {
            for (std::size_t j = 0; j < surface.grid.size(); ++j) {
                f << fmt(surface.grid[i]) << ',' << fmt(surface.grid[j]) << ','
                  << fmt(surface.values(static_cast<Index>(i), static_cast<Index>(j))) << ','
                  << n_trials << ',' << cfg.seed << ',' << digest << '\n';
            }
        }
        outputs.push_back("grid.csv");
    }

    // Mean factors each data-driven selector picks on the same trials.
    struct Selected {
        std::string method;
        Summary st, p;
    };
    std::vector<Selected> selected;
    for (const auto& spec : cfg.estimators) {
        if (spec.kind != EstimatorKind::rske || spec.shrinkage == ShrinkageMethod::oracle) continue;
        std::vector<ShrinkageFactors> picks(n_trials);
        parallel_for(
            n_trials, [&](std::size_t t) { picks[t] = select_factors(trials[t], spec); }, threads);
        std::vector<double> st, p;
        for (const auto& f : picks) {
            st.push_back(f.st);
            p.push_back(f.p);
        }
        selected.push_back({spec.label(), summarize(st), summarize(p)});
    }
    const ShrinkageFactors best = surface.argmin();
    selected.push_back({"oracle", Summary{best.st, 0.0, n_trials}, Summary{best.p, 0.0, n_trials}});

    Json sel = Json::array();
    {
        auto f = open_out(dir / "selected.csv");
        f << "method,rho_st_mean,rho_st_ci95,rho_p_mean,rho_p_ci95,nmse_at_mean,trials,seed,config_digest\n";
        for (const auto& s : selected) {
            // Surface value at the grid point nearest the mean selection.
            auto nearest = [&](double v) {
                const double idx = std::round(v / oc.step);
                return static_cast<Index>(
                    std::clamp(idx, 0.0, static_cast<double>(surface.grid.size() - 1)));
            };
            const double at = surface.values(nearest(s.st.mean), nearest(s.p.mean));
            f << s.method << ',' << fmt(s.st.mean) << ',' << fmt(s.st.ci95) << ',' << fmt(s.p.mean)
              << ',' << fmt(s.p.ci95) << ',' << fmt(at) << ',' << n_trials << ',' << cfg.seed << ','
              << digest << '\n';
            out << s.method << " rho_st=" << fmt(s.st.mean) << " rho_p=" << fmt(s.p.mean) << '\n';
            sel.push_back({{"method", s.method},
                           {"rho_st", summary_json(s.st)},
                           {"rho_p", summary_json(s.p)}});
        }
        outputs.push_back("selected.csv");
    }

    Json manifest = manifest_base("sweep", cfg, digest, threads);
    manifest["axis"] = "grid";
    manifest["grid"] = surface.grid;
    manifest["nmse_min"] = surface.min();
    manifest["selected"] = sel;
    manifest["outputs"] = outputs;
    write_json(dir / "manifest.json", manifest);
    return kExitOk;
}

int detection_run(const std::string& command, const ExperimentConfig& cfg,
                  const std::vector<double>& scr_db, int threads, std::ostream& out) {
    const std::string digest = config_digest(cfg);
    const fs::path dir = ensure_dir(cfg.output);
    const Scene scene(cfg.scene);
    const TargetSignature target = cfg.target.signature(cfg.scene.radar);

    // Every estimator sees the same draws, so the P_d comparison is paired.
    const std::uint64_t cal_seed = derive_seed(cfg.seed, 0, Stream::calibration);
    const std::uint64_t holdout_seed = derive_seed(cfg.seed, 1, Stream::calibration);
    const std::uint64_t pd_seed = derive_seed(cfg.seed, 0, Stream::target);

    auto f = open_out(dir / "pd.csv");
    f << "scr_db,trials,detections,pd,pfa_target,estimator,rho_st,rho_p,seed,config_digest,"
         "threshold,pd_ci95\n";
    Json estimators = Json::array();
    for (const auto& spec : cfg.estimators) {
        DetectionConfig dc;
        dc.estimator = spec;
        dc.target = target;
        dc.reuse_covariance = cfg.detection.reuse_covariance;
        dc.threads = threads;
        const DetectionThreshold th =
            calibrate_threshold(cfg.detection.pfa, scene, dc, cal_seed, cfg.detection.calibration_trials);
        Json entry = {{"estimator", spec.label()},
                      {"threshold", th.value},
                      {"calibration_trials", th.trials},
                      {"unstable", th.unstable}};
        if (cfg.detection.holdout_trials > 0) {
            const auto h0 = trial_statistics(scene, dc, cfg.detection.holdout_trials, holdout_seed,
                                             std::nullopt);
            const double fpr = static_cast<double>(count_detections(h0.stats, th.value)) /
                               static_cast<double>(cfg.detection.holdout_trials);
            entry["holdout_trials"] = cfg.detection.holdout_trials;
            entry["holdout_fpr"] = fpr;
        }
        const auto pts = pd_curve(scr_db, scene, dc, th, cfg.detection.trials, pd_seed);
        Json curve = Json::array();
        for (const auto& p : pts) {
            const double pd = p.pd();
            const double ci = 1.96 * std::sqrt(pd * (1.0 - pd) / static_cast<double>(p.trials));
            f << fmt(p.scr_db) << ',' << p.trials << ',' << p.detections << ',' << fmt(pd) << ','
              << fmt(cfg.detection.pfa) << ',' << spec.label() << ',' << fmt(p.rho_st_mean) << ','
              << fmt(p.rho_p_mean) << ',' << cfg.seed << ',' << digest << ',' << fmt(th.value) << ','
              << fmt(ci) << '\n';
            out << spec.label() << " scr=" << fmt(p.scr_db) << "dB pd=" << fmt(pd) << '\n';
            curve.push_back({{"scr_db", p.scr_db}, {"pd", pd}, {"ci95", ci}, {"detections", p.detections}});
        }
        entry["pd"] = curve;
        estimators.push_back(entry);
    }
    f.close();
    Json manifest = manifest_base(command, cfg, digest, threads);
    manifest["axis"] = "scr";
    manifest["detection_trials"] = cfg.detection.trials;
    manifest["estimators"] = estimators;
    manifest["outputs"] = Json::array({"pd.csv"});
    write_json(dir / "manifest.json", manifest);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// Subcommands.

int cmd_simulate(const CommonOptions& opt, std::optional<int> samples, const std::string& name,
                 std::ostream& out) {
    ExperimentConfig cfg = resolve_config(opt);
    if (samples) cfg.scene.samples = *samples;
    cfg.scene.validate();
    const SampleSet s = generate_sample_set(cfg.scene);
    const fs::path path = ensure_dir(cfg.output) / name;
    write_sample_set(path.string(), s);
    out << "wrote " << path.string() << " (L=" << s.size() << ", N_p=" << s.n_p << ", N_st=" << s.n_st
        << ")\n";
    out << "truth_digest " << truth_digest(s) << '\n';
    out << "file_digest " << file_digest(path) << '\n';
    return kExitOk;
}

int cmd_estimate(const CommonOptions& opt, const std::string& dataset,
                 const std::vector<std::string>& estimator_specs, std::ostream& out) {
    ExperimentConfig cfg = resolve_config(opt);
    if (!estimator_specs.empty()) {
        cfg.estimators.clear();
        for (const auto& e : estimator_specs) cfg.estimators.push_back(EstimatorSpec::parse(e));
        cfg.propagate();
    } else if (opt.config.empty()) {
        cfg.estimators = {EstimatorSpec::parse("rske:cv:knscm")};
        cfg.propagate();
    }
    const SampleSet samples = read_sample_set(dataset);
    const RadarParams radar = radar_for(samples, cfg, !opt.config.empty());
    const DataMatrix target = cfg.target.signature(radar).matrix(radar);
    const std::string digest = config_digest(cfg);
    const fs::path dir = ensure_dir(cfg.output);

    Json results = Json::array();
    auto csv = open_out(dir / "metrics.csv");
    csv << "estimator,L,nmse,scnr_loss,cond_st,cond_p,cond_full,rho_st,rho_p,iterations,seed,"
           "config_digest\n";
    for (const auto& spec : cfg.estimators) {
        const Estimate e = estimate(samples, spec);
        MetricRecord rec;
        rec.estimator = spec.label();
        rec.nmse = samples.truth ? nmse(e.cov, *samples.truth) : kNaN;
        rec.scnr_loss = samples.truth ? scnr_loss(target, e.cov, *samples.truth) : kNaN;
        rec.cond = cond_report(e.cov);
        rec.rho_st = e.rho.st;
        rec.rho_p = e.rho.p;
        rec.iterations = e.iterations;
        rec.seed = cfg.seed;
        rec.config_digest = digest;

        csv << rec.estimator << ',' << samples.size() << ',' << fmt(rec.nmse) << ','
            << fmt(rec.scnr_loss) << ',' << fmt(rec.cond.st) << ',' << fmt(rec.cond.p) << ','
            << fmt(rec.cond.full) << ',' << fmt(rec.rho_st) << ',' << fmt(rec.rho_p) << ','
            << rec.iterations << ',' << rec.seed << ',' << rec.config_digest << '\n';

        Json r = {{"estimator", rec.estimator},
                  {"shrinkage", rho_json(e.rho)},
                  {"iterations", e.iterations},
                  {"converged", e.converged},
                  {"nmse", finite_or_null(rec.nmse)},
                  {"scnr_loss", finite_or_null(rec.scnr_loss)},
                  {"cond", cond_json(rec.cond)}};
        r["report"] = e.report ? report_json(*e.report) : Json(nullptr);
        if (const auto* k = std::get_if<KroneckerCov>(&e.cov)) {
            r["estimate"] = kron_json(*k);
        } else {
            r["estimate"] = {{"full", matrix_json(std::get<Matrix>(e.cov))}};
        }
        results.push_back(r);
        out << rec.estimator << " nmse=" << fmt(rec.nmse) << " iterations=" << rec.iterations << '\n';
    }
    csv.close();
    write_json(dir / "report.json", {{"dataset", dataset},
                                     {"L", samples.size()},
                                     {"n_p", samples.n_p},
                                     {"n_st", samples.n_st},
                                     {"seed", cfg.seed},
                                     {"config_digest", digest},
                                     {"results", results}});
    return kExitOk;
}

int cmd_select(const CommonOptions& opt, const std::string& dataset, const std::string& method,
               const std::string& plug_in, std::ostream& out) {
    ExperimentConfig cfg = resolve_config(opt);
    std::string text = "rske:" + method;
    if (method != "oracle") text += ":" + plug_in;
    EstimatorSpec spec = EstimatorSpec::parse(text);
    spec.solver.delta = cfg.solver.delta;
    spec.solver.k_max = cfg.solver.k_max;
    spec.solver.force = cfg.solver.force;
    spec.oracle = cfg.oracle;
    const SampleSet samples = read_sample_set(dataset);
    const ShrinkageFactors f = select_factors(samples, spec);
    Json j = rho_json(f);
    j["estimator"] = spec.label();
    j["L"] = samples.size();
    j["n_st"] = samples.n_st;
    j["n_p"] = samples.n_p;
    j["dataset"] = dataset;
    j["config_digest"] = config_digest(cfg);
    j["seed"] = cfg.seed;
    write_json(ensure_dir(cfg.output) / "shrinkage.json", j);
    out << j.dump(2) << '\n';
    return kExitOk;
}

int cmd_detect(const CommonOptions& opt, std::ostream& out) {
    const ExperimentConfig cfg = resolve_config(opt);
    return detection_run("detect", cfg, cfg.detection.scr_db, resolve_threads(opt.threads), out);
}

int cmd_sweep(const CommonOptions& opt, std::ostream& out) {
    const ExperimentConfig cfg = resolve_config(opt);
    const int threads = resolve_threads(opt.threads);
    if (cfg.sweep.axis == "scr") return detection_run("sweep", cfg, cfg.sweep.values, threads, out);
    if (cfg.sweep.axis == "grid") return grid_sweep(cfg, threads, out);
    return metric_sweep(cfg, threads, out);
}

bool looks_like_ksamp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open amplitude file '" + path + "'");
    char head[5] = {};
    in.read(head, 5);
    return in.gcount() == 5 && std::string(head, 5) == "KSAMP";
}

int cmd_fit(const CommonOptions& opt, const std::string& input, const std::string& families,
            std::optional<int> bins, std::optional<int> channel, std::ostream& out) {
    ExperimentConfig cfg = resolve_config(opt);
    if (!families.empty()) {
        cfg.fit.families.clear();
        std::istringstream in(families);
        std::string name;
        while (std::getline(in, name, ',')) cfg.fit.families.push_back(parse_family(name));
    }
    if (bins) cfg.fit.bins = *bins;
    if (channel) cfg.fit.channel = *channel;
    cfg.validate();

    const std::vector<double> amps = looks_like_ksamp(input)
                                         ? amplitudes_from_samples(read_sample_set(input), cfg.fit.channel)
                                         : read_amplitudes_csv(input);
    const AmplitudeHistogram hist = empirical_pdf(amps, cfg.fit.bins);
    std::vector<FitResult> fits;
    for (const Family fam : cfg.fit.families) fits.push_back(fit_family(amps, fam, hist));

    const std::string digest = config_digest(cfg);
    const std::string input_digest = file_digest(input);
    auto f = open_out(ensure_dir(cfg.output) / "fit.csv");
    f << "family,param1,param2,fitting_error,gaussian_limit,converged,samples,bins,input_digest,seed,"
         "config_digest\n";
    for (const auto& r : fits) {
        const double p1 = !r.params.empty() ? r.params[0] : kNaN;
        const double p2 = r.params.size() > 1 ? r.params[1] : kNaN;
        f << to_string(r.family) << ',' << fmt(p1) << ',' << (r.params.size() > 1 ? fmt(p2) : "")
          << ',' << fmt(r.fitting_error) << ',' << (r.gaussian_limit ? 1 : 0) << ','
          << (r.converged ? 1 : 0) << ',' << amps.size() << ',' << cfg.fit.bins << ',' << input_digest
          << ',' << cfg.seed << ',' << digest << '\n';
    }
    f.close();
    write_fit_table(out, fits);
    return kExitOk;
}

void add_common(CLI::App* sub, CommonOptions& opt, bool with_threads) {
    sub->add_option("--config", opt.config, "JSON experiment config");
    sub->add_option("--seed", opt.seed, "Experiment seed (overrides the config)");
    sub->add_option("--out", opt.out, "Output directory");
    if (with_threads) {
        sub->add_option("--threads", opt.threads, "Worker threads (default: KRONEST_THREADS or all cores)")
            ->check(CLI::PositiveNumber);
    }
    sub->add_flag("--force-existence-override", opt.force,
                  "Solve even when the existence guard would refuse");
}

}  // namespace

Summary summarize(const std::vector<double>& values) {
    Summary s;
    s.count = values.size();
    if (values.empty()) {
        s.mean = kNaN;
        s.ci95 = kNaN;
        return s;
    }
    double sum = 0.0;
    for (const double v : values) sum += v;
    s.mean = sum / static_cast<double>(values.size());
    if (values.size() < 2) return s;
    double ss = 0.0;
    for (const double v : values) ss += (v - s.mean) * (v - s.mean);
    const double sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
    s.ci95 = 1.96 * sd / std::sqrt(static_cast<double>(values.size()));
    return s;
}

Json kron_json(const KroneckerCov& r) { return {{"r_st", matrix_json(r.st)}, {"r_p", matrix_json(r.p)}}; }

Json report_json(const SolverReport& rep) {
    return {{"iterations", rep.iterations},
            {"converged", rep.converged},
            {"final_distance", rep.final_distance},
            {"residual", {{"st", rep.residual.first}, {"p", rep.residual.second}}},
            {"costs", rep.costs},
            {"half_costs", rep.half_costs}};
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Robust shrinkage Kronecker covariance estimation experiments"};
    app.name(args.empty() ? "kronest" : args.front());
    app.require_subcommand(1);
    app.set_version_flag("--version", "kronest 0.1.0");

    CommonOptions opt;
    std::optional<int> samples;
    std::string name = "dataset.ksamp";
    std::string dataset;
    std::vector<std::string> estimators;
    std::string method = "cv";
    std::string plug_in = "knscm";
    std::string input;
    std::string families;
    std::optional<int> bins;
    std::optional<int> channel;

    auto* simulate = app.add_subcommand("simulate", "Generate a KSAMP dataset from a scene config");
    add_common(simulate, opt, false);
    simulate->add_option("--samples", samples, "Override the number of samples L")->check(CLI::PositiveNumber);
    simulate->add_option("--name", name, "Dataset file name inside --out");

    auto* est = app.add_subcommand("estimate", "Estimate covariances from a dataset");
    add_common(est, opt, false);
    est->add_option("--dataset", dataset, "KSAMP dataset")->required();
    est->add_option("--estimator", estimators, "Estimator spec, repeatable (e.g. rske:cv:knscm)");

    auto* sel = app.add_subcommand("select-shrinkage", "Choose shrinkage factors for a dataset");
    add_common(sel, opt, false);
    sel->add_option("--dataset", dataset, "KSAMP dataset")->required();
    sel->add_option("--method", method, "cv | koas | oracle")
        ->check(CLI::IsMember({"cv", "koas", "oracle"}));
    sel->add_option("--plug-in", plug_in, "knscm | kmle")->check(CLI::IsMember({"knscm", "kmle"}));

    auto* det = app.add_subcommand("detect", "Calibrate NMF thresholds and measure P_d");
    add_common(det, opt, true);

    auto* sweep = app.add_subcommand("sweep", "Monte-Carlo sweep over L, SCR, nu, dimension or the shrinkage grid");
    add_common(sweep, opt, true);

    auto* fit = app.add_subcommand("fit", "Fit amplitude distributions");
    add_common(fit, opt, false);
    fit->add_option("--input", input, "Amplitude CSV or KSAMP dataset")->required();
    fit->add_option("--families", families, "Comma-separated list (rayleigh,weibull,k,igcg)");
    fit->add_option("--bins", bins, "Histogram bins")->check(CLI::PositiveNumber);
    fit->add_option("--channel", channel, "Polarization channel of a KSAMP input (-1 = all)");

    std::vector<std::string> rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
    try {
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitIo;
    }

    try {
        if (*simulate) return cmd_simulate(opt, samples, name, out);
        if (*est) return cmd_estimate(opt, dataset, estimators, out);
        if (*sel) return cmd_select(opt, dataset, method, plug_in, out);
        if (*det) return cmd_detect(opt, out);
        if (*sweep) return cmd_sweep(opt, out);
        if (*fit) return cmd_fit(opt, input, families, bins, channel, out);
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const DimensionError& e) {
        err << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitNumerical;
    }
    return kExitIo;
}

int run(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return run(args, std::cout, std::cerr);
}

}  // namespace kronest::cli
