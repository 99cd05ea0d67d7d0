#include "kinverify/cli/report.hpp"

#include <cstdio>

namespace kinverify::cli {
namespace {

using json = nlohmann::ordered_json;

json relation_map(const std::map<Relation, double>& m) {
    json j = json::object();
    for (const auto& [r, v] : m) j[std::string(to_string(r))] = v;
    return j;
}

json roc_json(const std::vector<RocPoint>& roc) {
    json j = json::array();
    for (const auto& p : roc) j.push_back({p.false_accept, p.true_accept});
    return j;
}

std::string fixed2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

}  // namespace

json report_json(const CvResult& r, const RunConfig& config) {
    json j;
    j["method"] = method_name(config.pipeline);
    j["config"] = to_json(config);
    j["pairs"] = r.pairs.size();
    j["images"] = r.image_ids.size();
    j["mean_accuracy"] = r.mean_accuracy;
    j["relation_accuracy"] = relation_map(r.relation_accuracy);
    j["eer"] = r.eer;
    j["folds"] = json::array();
    for (const auto& f : r.folds) {
        json fj;
        fj["fold"] = f.fold;
        fj["train_pairs"] = f.train_pairs;
        fj["dropped_train_pairs"] = f.dropped_train_pairs;
        fj["test_pairs"] = f.scores.size();
        fj["threshold"] = f.threshold.value;
        fj["train_accuracy"] = 100.0 * f.threshold.training_accuracy;
        fj["accuracy"] = f.metrics.accuracy;
        fj["relation_accuracy"] = relation_map(f.metrics.relation_accuracy);
        fj["eer"] = f.metrics.eer;
        json hist = json::array();
        for (const auto& h : f.fit_history)
            hist.push_back({{"sweep", h.sweep}, {"mode", h.mode}, {"residual", h.residual}});
        fj["txqda_residuals"] = std::move(hist);
        json ica = json::object();
        for (const auto& [side, stats] : f.ica) {
            json per = json::array();
            for (const auto& s : stats)
                per.push_back({{"iterations", s.iterations}, {"final_delta", s.final_delta}});
            ica["L" + std::to_string(side)] = std::move(per);
        }
        fj["ica"] = std::move(ica);
        j["folds"].push_back(std::move(fj));
    }
    j["roc"] = roc_json(r.roc);
    j["relation_distribution"] = json::array();
    for (const auto& s : r.distribution)
        j["relation_distribution"].push_back({{"relation", std::string(to_string(s.relation))},
                                              {"count", s.count},
                                              {"percent", s.percent},
                                              {"reference_percent", s.reference_percent}});
    j["reference"] = {{"method", kReferenceMethod},
                      {"mean_accuracy", kReferenceAccuracy},
                      {"dataset", "Cornell KinFace"},
                      {"gating", false}};
    return j;
}

std::string table_text(const CvResult& r, const RunConfig& config) {
    const std::string name = method_name(config.pipeline);
    std::size_t width = std::max<std::size_t>(name.size(), std::string(kReferenceMethod).size()) + 4;
    auto row = [&](const std::string& method, const std::string& mean) {
        std::string line = method;
        line.resize(width, ' ');
        return line + mean + "\n";
    };
    std::string out = row("Method", "Mean");
    out += row(name, fixed2(r.mean_accuracy));
    out += "\n";
    for (const auto& [rel, acc] : r.relation_accuracy)
        out += row(std::string(to_string(rel)), fixed2(acc));
    out += row("EER", fixed2(r.eer));
    out += "\n" + row("reference: " + std::string(kReferenceMethod), fixed2(kReferenceAccuracy));
    return out;
}

json audit_json(const CvResult& r) {
    json j;
    j["images"] = r.image_ids;
    json folds = json::array();
    for (const auto& [fold, ids] : r.test_ids) {
        json fj;
        fj["fold"] = fold;
        fj["test_images"] = ids;
        json stages = json::array();
        for (const auto& e : r.audit)
            if (e.fold == fold)
                stages.push_back({{"stage", e.stage}, {"note", e.note}, {"images", e.image_ids}});
        fj["training_stages"] = std::move(stages);
        folds.push_back(std::move(fj));
    }
    j["folds"] = std::move(folds);
    j["leaks"] = find_leaks(r);
    return j;
}

}  // namespace kinverify::cli
