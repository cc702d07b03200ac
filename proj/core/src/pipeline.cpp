#include "kronest/pipeline.hpp"

#include <charconv>
#include <sstream>
#include <vector>

namespace kronest {

namespace {

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, sep)) out.push_back(item);
    if (!text.empty() && text.back() == sep) out.emplace_back();
    return out;
}

double parse_rho(const std::string& s, const std::string& spec) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !(v >= 0.0 && v <= 1.0)) {
        throw ConfigError("estimator '" + spec + "': shrinkage factor '" + s +
                          "' is not a number in [0, 1]");
    }
    return v;
}

PlugInSource parse_plug(const std::string& s, const std::string& spec) {
    if (s == "knscm") return PlugInSource::knscm;
    if (s == "kmle") return PlugInSource::kmle;
    throw ConfigError("estimator '" + spec + "': unknown plug-in '" + s + "'");
}

std::string format_rho(double v) {
    std::ostringstream out;
    out << v;
    return out.str();
}

}  // namespace

EstimatorSpec EstimatorSpec::parse(const std::string& text) {
    const auto parts = split(text, ':');
    EstimatorSpec spec;
    if (parts.empty()) throw ConfigError("empty estimator spec");
    const std::string& head = parts[0];
    if (head == "scm" || head == "knscm" || head == "kmle") {
        if (parts.size() != 1) throw ConfigError("estimator '" + text + "' takes no options");
        spec.kind = head == "scm" ? EstimatorKind::scm
                    : head == "knscm" ? EstimatorKind::knscm
                                      : EstimatorKind::kmle;
        return spec;
    }
    if (head != "rske") throw ConfigError("unknown estimator '" + text + "'");
    spec.kind = EstimatorKind::rske;
    if (parts.size() < 2) throw ConfigError("estimator '" + text + "': missing shrinkage method");
    const std::string& method = parts[1];
    if (method == "cv" || method == "koas") {
        spec.shrinkage = method == "cv" ? ShrinkageMethod::cv : ShrinkageMethod::koas;
        if (parts.size() > 3) throw ConfigError("estimator '" + text + "': too many fields");
        if (parts.size() == 3) spec.plug_in = parse_plug(parts[2], text);
    } else if (method == "manual") {
        if (parts.size() != 4) {
            throw ConfigError("estimator '" + text + "': expected rske:manual:<rho_st>:<rho_p>");
        }
        spec.shrinkage = ShrinkageMethod::manual;
        spec.manual.st = parse_rho(parts[2], text);
        spec.manual.p = parse_rho(parts[3], text);
    } else if (method == "oracle") {
        if (parts.size() != 2) throw ConfigError("estimator '" + text + "': too many fields");
        spec.shrinkage = ShrinkageMethod::oracle;
    } else {
        throw ConfigError("estimator '" + text + "': unknown shrinkage method '" + method + "'");
    }
    return spec;
}

std::string EstimatorSpec::label() const {
    switch (kind) {
        case EstimatorKind::scm: return "scm";
        case EstimatorKind::knscm: return "knscm";
        case EstimatorKind::kmle: return "kmle";
        case EstimatorKind::rske: break;
    }
    switch (shrinkage) {
        case ShrinkageMethod::cv: return "rske:cv:" + to_string(plug_in);
        case ShrinkageMethod::koas: return "rske:koas:" + to_string(plug_in);
        case ShrinkageMethod::manual:
            return "rske:manual:" + format_rho(manual.st) + ":" + format_rho(manual.p);
        case ShrinkageMethod::oracle: return "rske:oracle";
    }
    return "rske";
}

ShrinkageFactors select_factors(const SampleSet& samples, const EstimatorSpec& spec) {
    if (spec.kind != EstimatorKind::rske) return ShrinkageFactors{};
    const std::size_t L = samples.size();
    switch (spec.shrinkage) {
        case ShrinkageMethod::manual: {
            ShrinkageFactors f = spec.manual;
            f.method = ShrinkageMethod::manual;
            f.validate();
            return f;
        }
        case ShrinkageMethod::koas: {
            const PlugIn plug = PlugIn::from_samples(samples, spec.plug_in, spec.solver);
            return enforce_support(koas_factors(plug, L), L, samples.n_st, samples.n_p);
        }
        case ShrinkageMethod::cv: {
            const PlugIn plug = PlugIn::from_samples(samples, spec.plug_in, spec.solver);
            return enforce_support(cv_factors_fast(samples, plug), L, samples.n_st, samples.n_p);
        }
        case ShrinkageMethod::oracle:
            if (!samples.truth) throw ConfigError("oracle shrinkage needs a ground-truth covariance");
            return oracle_factors(samples, *samples.truth, spec.oracle);
    }
    throw ConfigError("unknown shrinkage method");
}

Estimate estimate(const SampleSet& samples, const EstimatorSpec& spec) {
    Estimate out;
    switch (spec.kind) {
        case EstimatorKind::scm:
            out.cov = scm(samples);
            return out;
        case EstimatorKind::knscm:
            out.cov = knscm(samples);
            return out;
        case EstimatorKind::kmle: {
            SolverReport rep = kmle(samples, spec.solver);
            out.iterations = rep.iterations;
            out.converged = rep.converged;
            out.cov = rep.estimate;
            out.report = std::move(rep);
            return out;
        }
        case EstimatorKind::rske: {
            out.rho = select_factors(samples, spec);
            SolverReport rep = rske(samples, out.rho, spec.solver);
            out.iterations = rep.iterations;
            out.converged = rep.converged;
            out.cov = rep.estimate;
            out.report = std::move(rep);
            return out;
        }
    }
    throw ConfigError("unknown estimator kind");
}

}  // namespace kronest
