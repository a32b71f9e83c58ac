#include "cct/serialize.hpp"

#include "cct/error.hpp"

namespace cct {

using nlohmann::json;

json to_json(const DiscoveryBound& b) {
    json j;
    j["subset_spec"] = b.subset_spec.empty() ? "custom" : b.subset_spec;
    j["d"] = b.d;
    j["alpha"] = b.alpha;
    j["test"] = b.test_id;
    j["method"] = to_string(b.method);
    j["subset_size"] = b.subset.size();
    j["subset"] = b.subset;
    j["pvalue"] = b.pvalue;
    j["valid"] = b.valid;
    return j;
}

json to_json(const DiscoverySet& s) {
    return json{{"indices", s.indices},
                {"kind", s.kind == DiscoverySet::Kind::bh_fdr ? "bh_fdr" : "fwer_closed_testing"}};
}

json to_json(const OutlierDistribution& g) {
    json j;
    j["inlier_beta"] = {g.inlier_beta.a, g.inlier_beta.b};
    j["outlier_beta"] = {g.outlier_beta.a, g.outlier_beta.b};
    j["theta1_hat"] = g.theta1_hat;
    j["direction"] = to_string(g.direction);
    j["monotone_density"] = g.monotone_density;
    j["split_seed"] = g.split.seed;
    j["reference_half"] = g.split.reference_half;
    j["remaining_calibration"] = g.split.remaining_calibration;
    j["rescaled"] = g.rescaled;
    j["rescale"] = {g.rescale_lo, g.rescale_hi};
    return j;
}

OutlierDistribution outlier_distribution_from_json(const json& j) {
    try {
        OutlierDistribution g;
        g.inlier_beta = {j.at("inlier_beta").at(0).get<double>(), j.at("inlier_beta").at(1).get<double>()};
        g.outlier_beta = {j.at("outlier_beta").at(0).get<double>(), j.at("outlier_beta").at(1).get<double>()};
        g.theta1_hat = j.at("theta1_hat").get<double>();
        auto dir = j.at("direction").get<std::string>();
        if (dir != "increasing" && dir != "decreasing") throw Error("bad direction '" + dir + "'");
        g.direction = dir == "increasing" ? Direction::increasing : Direction::decreasing;
        g.monotone_density = j.at("monotone_density").get<std::vector<double>>();
        g.split.seed = j.at("split_seed").get<std::uint64_t>();
        g.split.reference_half = j.at("reference_half").get<std::vector<int>>();
        g.split.remaining_calibration = j.at("remaining_calibration").get<std::vector<int>>();
        g.rescaled = j.at("rescaled").get<bool>();
        g.rescale_lo = j.at("rescale").at(0).get<double>();
        g.rescale_hi = j.at("rescale").at(1).get<double>();
        return g;
    } catch (const json::exception& e) {
        throw Error(std::string("malformed outlier distribution: ") + e.what());
    }
}

json to_json(const AcodeResult& r) {
    json j;
    j["selected_scorer"] = r.selected_scorer.id();
    j["selected_test"] = r.selected_test.id();
    j["bound"] = to_json(r.bound);
    j["global_pvalue"] = r.global_pvalue;
    json table = json::array();
    for (const auto& c : r.tuning_table)
        table.push_back({{"scorer", c.scorer}, {"test", c.test}, {"d_tune", c.d}, {"p_tune", c.pvalue}});
    j["tuning_table"] = table;
    j["manifest"] = {{"seed", r.seed},
                     {"scorer_grid", r.scorer_grid},
                     {"test_grid", r.test_grid},
                     {"sizes", {{"train", r.n_train}, {"tune", r.n_tune}, {"calibration", r.n_cal}, {"test", r.n_test}}}};
    return j;
}

json to_json(const GeneratorSpec& g) {
    json j;
    j["kind"] = g.kind_name();
    j["seed"] = g.seed;
    j["sizes"] = {{"train", g.n_train}, {"calibration", g.n_cal}, {"tune", g.n_tune}, {"test", g.n_test}};
    j["outliers"] = g.n_outliers;
    switch (g.kind) {
        case GeneratorSpec::Kind::gaussian_mixture:
            j["a_inlier"] = g.a_inlier;
            j["a_outlier"] = g.a_outlier;
            j["dim"] = g.dim;
            j["atoms"] = g.atoms;
            break;
        case GeneratorSpec::Kind::adversarial:
            j["dim"] = g.dim;
            j["candidates"] = g.candidates;
            j["quantile_level"] = g.quantile_level;
            j["adversary_k"] = g.adversary_k;
            break;
        case GeneratorSpec::Kind::score_level:
            j["inlier_law"] = g.inlier_law == InlierLaw::uniform01 ? "uniform01" : "std_normal";
            j["outlier_law"] = g.outlier_law.id();
            break;
    }
    return j;
}

}  // namespace cct
