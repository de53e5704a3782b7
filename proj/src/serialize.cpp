#include "itherm/serialize.hpp"

#include <cstdio>

namespace itherm {

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

nlohmann::json to_json(const FiParams& p) {
    return {{"T", p.T},         {"t", p.t}, {"P0", p.P0}, {"Delta", p.Delta},
            {"M", p.M}, {"Gamma", p.Gamma}, {"n", p.n}};
}

nlohmann::json to_json(const FisherReport& r) {
    nlohmann::json j{{"value", r.value},
                     {"method", to_string(r.method)},
                     {"params", to_json(r.params)},
                     {"warnings", r.warnings}};
    if (r.asymptotic_case) j["case"] = to_string(*r.asymptotic_case);
    if (r.cross_check_rel_dev) j["cross_check_rel_dev"] = *r.cross_check_rel_dev;
    if (r.predicate_ratio) j["predicate_ratio"] = *r.predicate_ratio;
    return j;
}

nlohmann::json to_json(const FisherMatrix2& chi) {
    return {{"chi11", chi.chi11},
            {"chi12", chi.chi12},
            {"chi22", chi.chi22},
            {"trace_bound", crb_trace_bound(chi)}};
}

nlohmann::json to_json(const EstimationReport& r) {
    return {{"estimator", to_string(r.estimator)},
            {"T_true", r.T_true},
            {"trials", r.trials},
            {"samples_per_trial", r.samples_per_trial},
            {"seed", r.seed},
            {"censored", r.censored},
            {"t_hat_mean", r.t_hat_mean},
            {"empirical_mse", r.empirical_mse},
            {"predicted_error_per_sample", r.predicted_error_per_sample},
            {"predicted_error_per_estimate", r.predicted_error_per_estimate},
            {"crb_per_sample", r.crb_per_sample},
            {"crb_per_estimate", r.crb_per_estimate}};
}

void write_csv(const GridDensity& density, std::ostream& os) {
    os << "P,f\n";
    for (std::size_t i = 0; i < density.size(); ++i)
        os << format_double(density.momentum(i)) << ',' << format_double(density.values[i])
           << '\n';
}

}  // namespace itherm
