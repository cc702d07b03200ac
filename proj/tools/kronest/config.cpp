#include "config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <type_traits>

namespace kronest::cli {

namespace {

std::string join_path(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

/// Reads fields out of one JSON object; `finish` rejects every key not consumed.
class ObjectReader {
public:
    ObjectReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) {
            throw ConfigError("config: '" + (path_.empty() ? "<root>" : path_) +
                              "' must be an object");
        }
    }

    const Json* find(const std::string& key) {
        const auto it = j_.find(key);
        if (it == j_.end()) return nullptr;
        seen_.insert(key);
        return &*it;
    }

    std::string path(const std::string& key) const { return join_path(path_, key); }

    template <class T>
    void get(const std::string& key, T& out) {
        const Json* v = find(key);
        if (v == nullptr) return;
        out = convert<T>(*v, path(key));
    }

    void finish() const {
        for (const auto& item : j_.items()) {
            if (seen_.count(item.key()) == 0) {
                throw ConfigError("config: unknown key '" + path(item.key()) + "'");
            }
        }
    }

    template <class T>
    static T convert(const Json& v, const std::string& where) {
        if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) throw ConfigError("config: '" + where + "' must be a boolean");
            return v.get<bool>();
        } else if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer()) {
                throw ConfigError("config: '" + where + "' must be an integer");
            }
            if constexpr (std::is_unsigned_v<T>) {
                if (v.is_number_unsigned()) return v.get<T>();
                if (v.get<std::int64_t>() < 0) {
                    throw ConfigError("config: '" + where + "' must be nonnegative");
                }
            }
            return v.get<T>();
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!v.is_number()) throw ConfigError("config: '" + where + "' must be a number");
            return v.get<T>();
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) throw ConfigError("config: '" + where + "' must be a string");
            return v.get<std::string>();
        } else {
            static_assert(sizeof(T) == 0, "unsupported config field type");
        }
    }

private:
    const Json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

Complex parse_complex(const Json& v, const std::string& where) {
    if (v.is_number()) return {v.get<double>(), 0.0};
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
        return {v[0].get<double>(), v[1].get<double>()};
    }
    throw ConfigError("config: '" + where + "' must be a number or a [re, im] pair");
}

Json complex_json(Complex c) { return Json::array({c.real(), c.imag()}); }

std::vector<double> parse_numbers(const Json& v, const std::string& where) {
    if (!v.is_array()) throw ConfigError("config: '" + where + "' must be an array of numbers");
    std::vector<double> out;
    for (const auto& x : v) out.push_back(ObjectReader::convert<double>(x, where + "[]"));
    return out;
}

void read_radar(const Json& j, const std::string& path, RadarParams& r) {
    ObjectReader in(j, path);
    in.get("wavelength", r.wavelength);
    in.get("prf", r.prf);
    in.get("velocity", r.velocity);
    in.get("spacing", r.spacing);
    in.get("n_s", r.n_s);
    in.get("n_t", r.n_t);
    in.get("n_p", r.n_p);
    in.finish();
}

void read_scene(const Json& j, const std::string& path, SceneConfig& s,
                std::optional<std::uint64_t>& scene_seed) {
    ObjectReader in(j, path);
    if (const Json* v = in.find("radar")) read_radar(*v, in.path("radar"), s.radar);
    if (const Json* v = in.find("polarization")) {
        ObjectReader pol(*v, in.path("polarization"));
        if (const Json* rc = pol.find("rho_c")) s.polarization.rho_c = parse_complex(*rc, pol.path("rho_c"));
        pol.get("gamma_c", s.polarization.gamma_c);
        pol.get("delta_c", s.polarization.delta_c);
        pol.finish();
    }
    if (const Json* v = in.find("patches")) {
        if (!v->is_array()) throw ConfigError("config: '" + in.path("patches") + "' must be an array");
        s.patches.clear();
        for (std::size_t i = 0; i < v->size(); ++i) {
            ObjectReader patch((*v)[i], in.path("patches") + "[" + std::to_string(i) + "]");
            ClutterPatch p;
            patch.get("azimuth", p.azimuth);
            patch.get("power", p.power);
            patch.finish();
            s.patches.push_back(p);
        }
    }
    in.get("n_patches", s.n_patches);
    in.get("azimuth_min_deg", s.azimuth_min_deg);
    in.get("azimuth_max_deg", s.azimuth_max_deg);
    if (const Json* v = in.find("texture")) {
        ObjectReader tex(*v, in.path("texture"));
        tex.get("nu", s.texture.nu);
        tex.finish();
    }
    in.get("cnr_db", s.cnr_db);
    in.get("noise", s.noise);
    in.get("samples", s.samples);
    std::uint64_t seed = 0;
    if (in.find("seed") != nullptr) {
        in.get("seed", seed);
        scene_seed = seed;
    }
    in.finish();
}

Json scene_json(const SceneConfig& s) {
    Json patches = Json::array();
    for (const auto& p : s.patches) patches.push_back({{"azimuth", p.azimuth}, {"power", p.power}});
    return {
        {"radar",
         {{"wavelength", s.radar.wavelength},
          {"prf", s.radar.prf},
          {"velocity", s.radar.velocity},
          {"spacing", s.radar.spacing},
          {"n_s", s.radar.n_s},
          {"n_t", s.radar.n_t},
          {"n_p", s.radar.n_p}}},
        {"polarization",
         {{"rho_c", complex_json(s.polarization.rho_c)},
          {"gamma_c", s.polarization.gamma_c},
          {"delta_c", s.polarization.delta_c}}},
        {"patches", patches},
        {"n_patches", s.n_patches},
        {"azimuth_min_deg", s.azimuth_min_deg},
        {"azimuth_max_deg", s.azimuth_max_deg},
        {"texture", {{"nu", s.texture.nu}}},
        {"cnr_db", s.cnr_db},
        {"noise", s.noise},
        {"samples", s.samples},
        {"seed", s.seed},
    };
}

void merge_leaf(Json& root, const std::vector<std::string>& keys, const Json& value,
                const std::string& full) {
    Json* node = &root;
    for (std::size_t i = 0; i + 1 < keys.size(); ++i) {
        Json& next = (*node)[keys[i]];
        if (next.is_null()) next = Json::object();
        if (!next.is_object()) throw ConfigError("config: '" + full + "' conflicts with a value");
        node = &next;
    }
    const std::string& last = keys.back();
    if (node->contains(last)) {
        Json& existing = (*node)[last];
        if (existing.is_object() && value.is_object()) {
            for (const auto& item : value.items()) {
                merge_leaf(existing, {item.key()}, item.value(), full + "." + item.key());
            }
            return;
        }
        throw ConfigError("config: key '" + full + "' given more than once");
    }
    (*node)[last] = value;
}

std::vector<std::string> split_dots(const std::string& key) {
    std::vector<std::string> parts;
    std::string item;
    std::istringstream in(key);
    while (std::getline(in, item, '.')) {
        if (item.empty()) throw ConfigError("config: malformed key '" + key + "'");
        parts.push_back(item);
    }
    if (parts.empty() || key.back() == '.') throw ConfigError("config: malformed key '" + key + "'");
    return parts;
}

}  // namespace

TargetSignature TargetSpec::signature(const RadarParams& radar) const {
    TargetSignature t = TargetSignature::from_angles(doppler, azimuth_deg, elevation_deg, radar);
    if (!polarization.empty()) {
        t.polarization = Vector(static_cast<Index>(polarization.size()));
        for (std::size_t i = 0; i < polarization.size(); ++i) {
            t.polarization(static_cast<Index>(i)) = polarization[i];
        }
    }
    return t;
}

Json expand_dotted_keys(const Json& doc) {
    if (!doc.is_object()) return doc;
    Json out = Json::object();
    for (const auto& item : doc.items()) {
        const Json value = expand_dotted_keys(item.value());
        merge_leaf(out, split_dots(item.key()), value, item.key());
    }
    return out;
}

void ExperimentConfig::propagate() {
    scene.seed = seed;
    for (auto& e : estimators) {
        e.solver.delta = solver.delta;
        e.solver.k_max = solver.k_max;
        e.solver.force = solver.force;
        e.oracle = oracle;
        e.oracle.solver.force = solver.force;
    }
}

void ExperimentConfig::validate() const {
    scene.validate();
    if (estimators.empty()) throw ConfigError("config: the estimator list is empty");
    if (trials < 1) throw ConfigError("config: trials must be at least 1");
    if (!(solver.delta > 0.0)) throw ConfigError("config: solver.delta must be positive");
    if (solver.k_max < 1) throw ConfigError("config: solver.k_max must be at least 1");
    if (!(oracle.step > 0.0) || !(oracle.max >= 0.0 && oracle.max < 1.0)) {
        throw ConfigError("config: oracle grid needs step > 0 and max in [0, 1)");
    }
    static const std::set<std::string> axes{"none", "L", "scr", "nu", "dim", "grid"};
    if (axes.count(sweep.axis) == 0) throw ConfigError("config: unknown sweep axis '" + sweep.axis + "'");
    if (sweep.axis != "none" && sweep.axis != "grid" && sweep.values.empty()) {
        throw ConfigError("config: sweep axis '" + sweep.axis + "' needs values");
    }
    if (!(detection.pfa > 0.0 && detection.pfa <= 1.0)) {
        throw ConfigError("config: detection.pfa must lie in (0, 1]");
    }
    if (detection.trials < 1) throw ConfigError("config: detection.trials must be at least 1");
    if (fit.bins < 1) throw ConfigError("config: fit.bins must be at least 1");
    if (fit.families.empty()) throw ConfigError("config: fit.families is empty");
}

ExperimentConfig parse_config(const Json& raw) {
    const Json doc = expand_dotted_keys(raw);
    ExperimentConfig cfg = default_config();
    ObjectReader in(doc, "");

    std::optional<std::uint64_t> scene_seed;
    if (const Json* v = in.find("scene")) read_scene(*v, "scene", cfg.scene, scene_seed);

    if (const Json* v = in.find("estimators")) {
        if (!v->is_array()) throw ConfigError("config: 'estimators' must be an array of strings");
        cfg.estimators.clear();
        for (const auto& e : *v) {
            cfg.estimators.push_back(
                EstimatorSpec::parse(ObjectReader::convert<std::string>(e, "estimators[]")));
        }
    }
    if (const Json* v = in.find("solver")) {
        ObjectReader s(*v, "solver");
        s.get("delta", cfg.solver.delta);
        s.get("k_max", cfg.solver.k_max);
        s.get("force_existence_override", cfg.solver.force);
        s.finish();
    }
    if (const Json* v = in.find("oracle")) {
        ObjectReader o(*v, "oracle");
        o.get("step", cfg.oracle.step);
        o.get("max", cfg.oracle.max);
        o.get("k_max", cfg.oracle.solver.k_max);
        o.get("delta", cfg.oracle.solver.delta);
        o.get("warm_start", cfg.oracle.warm_start);
        o.finish();
    }
    if (const Json* v = in.find("sweep")) {
        ObjectReader s(*v, "sweep");
        s.get("axis", cfg.sweep.axis);
        if (const Json* vals = s.find("values")) cfg.sweep.values = parse_numbers(*vals, "sweep.values");
        s.finish();
    }
    in.get("trials", cfg.trials);
    bool top_seed = in.find("seed") != nullptr;
    in.get("seed", cfg.seed);
    if (scene_seed) {
        if (top_seed && *scene_seed != cfg.seed) {
            throw ConfigError("config: 'seed' and 'scene.seed' disagree");
        }
        cfg.seed = *scene_seed;
    }
    in.get("output", cfg.output);
    if (const Json* v = in.find("target")) {
        ObjectReader t(*v, "target");
        t.get("doppler", cfg.target.doppler);
        t.get("azimuth_deg", cfg.target.azimuth_deg);
        t.get("elevation_deg", cfg.target.elevation_deg);
        if (const Json* p = t.find("polarization")) {
            if (!p->is_array()) throw ConfigError("config: 'target.polarization' must be an array");
            for (const auto& c : *p) {
                cfg.target.polarization.push_back(parse_complex(c, "target.polarization[]"));
            }
        }
        t.finish();
    }
    if (const Json* v = in.find("detection")) {
        ObjectReader d(*v, "detection");
        d.get("pfa", cfg.detection.pfa);
        d.get("calibration_trials", cfg.detection.calibration_trials);
        d.get("trials", cfg.detection.trials);
        d.get("holdout_trials", cfg.detection.holdout_trials);
        d.get("reuse_covariance", cfg.detection.reuse_covariance);
        if (const Json* s = d.find("scr_db")) cfg.detection.scr_db = parse_numbers(*s, "detection.scr_db");
        d.finish();
    }
    if (const Json* v = in.find("fit")) {
        ObjectReader f(*v, "fit");
        if (const Json* fams = f.find("families")) {
            if (!fams->is_array()) throw ConfigError("config: 'fit.families' must be an array");
            cfg.fit.families.clear();
            for (const auto& name : *fams) {
                cfg.fit.families.push_back(
                    parse_family(ObjectReader::convert<std::string>(name, "fit.families[]")));
            }
        }
        f.get("bins", cfg.fit.bins);
        f.get("channel", cfg.fit.channel);
        f.finish();
    }
    in.finish();

    cfg.propagate();
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    Json doc;
    try {
        doc = Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw ParseError("config '" + path + "': " + e.what(), e.byte);
    }
    return parse_config(doc);
}

ExperimentConfig default_config() {
    ExperimentConfig cfg;
    cfg.estimators = {EstimatorSpec::parse("scm"), EstimatorSpec::parse("knscm"),
                      EstimatorSpec::parse("kmle"), EstimatorSpec::parse("rske:koas:knscm"),
                      EstimatorSpec::parse("rske:cv:knscm")};
    cfg.propagate();
    return cfg;
}

Json to_json(const ExperimentConfig& cfg) {
    Json estimators = Json::array();
    for (const auto& e : cfg.estimators) estimators.push_back(e.label());
    Json pol = Json::array();
    for (const auto& c : cfg.target.polarization) pol.push_back(complex_json(c));
    Json families = Json::array();
    for (const auto f : cfg.fit.families) families.push_back(to_string(f));
    return {
        {"scene", scene_json(cfg.scene)},
        {"estimators", estimators},
        {"solver",
         {{"delta", cfg.solver.delta},
          {"k_max", cfg.solver.k_max},
          {"force_existence_override", cfg.solver.force}}},
        {"oracle",
         {{"step", cfg.oracle.step},
          {"max", cfg.oracle.max},
          {"k_max", cfg.oracle.solver.k_max},
          {"delta", cfg.oracle.solver.delta},
          {"warm_start", cfg.oracle.warm_start}}},
        {"sweep", {{"axis", cfg.sweep.axis}, {"values", cfg.sweep.values}}},
        {"trials", cfg.trials},
        {"seed", cfg.seed},
        {"target",
         {{"doppler", cfg.target.doppler},
          {"azimuth_deg", cfg.target.azimuth_deg},
          {"elevation_deg", cfg.target.elevation_deg},
          {"polarization", pol}}},
        {"detection",
         {{"pfa", cfg.detection.pfa},
          {"calibration_trials", cfg.detection.calibration_trials},
          {"trials", cfg.detection.trials},
          {"holdout_trials", cfg.detection.holdout_trials},
          {"reuse_covariance", cfg.detection.reuse_covariance},
          {"scr_db", cfg.detection.scr_db}}},
        {"fit", {{"families", families}, {"bins", cfg.fit.bins}, {"channel", cfg.fit.channel}}},
    };
}

std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string fnv1a_hex(std::string_view bytes) {
    static constexpr char digits[] = "0123456789abcdef";
    std::uint64_t h = fnv1a(bytes);
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[h & 0xf];
        h >>= 4;
    }
    return out;
}

std::string config_digest(const ExperimentConfig& cfg) {
    // The seed travels in its own column, so the digest identifies the experiment alone.
    Json j = to_json(cfg);
    j.erase("seed");
    j["scene"].erase("seed");
    return fnv1a_hex(j.dump());
}

}  // namespace kronest::cli
