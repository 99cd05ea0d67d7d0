#include "kinverify/protocol.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <numeric>
#include <sstream>

#include "kinverify/error.hpp"
#include "kinverify/io.hpp"
#include "kinverify/rng.hpp"

namespace kinverify {
namespace {

std::string squash(std::string_view text) {
    std::string out;
    for (char c : text)
        if (std::isalnum(static_cast<unsigned char>(c)))
            out.push_back(char(std::tolower(static_cast<unsigned char>(c))));
    return out;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur.push_back('"');
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    fields.push_back(trim(cur));
    return fields;
}

int parse_int(const std::string& s, const std::string& what, std::size_t line_no) {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    require(ec == std::errc() && ptr == s.data() + s.size(), ErrorCode::invalid_argument,
            "manifest line " + std::to_string(line_no) + ": " + what + " '" + s +
                "' is not an integer");
    return v;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    return out + "\"";
}

// Fisher-Yates
template <class T>
void shuffle(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}

}  // namespace

std::string_view to_string(Relation r) noexcept {
    switch (r) {
        case Relation::father_son: return "father-son";
        case Relation::father_daughter: return "father-daughter";
        case Relation::mother_son: return "mother-son";
        case Relation::mother_daughter: return "mother-daughter";
    }
    return "unknown";
}

Relation parse_relation(std::string_view text) {
    const std::string k = squash(text);
    if (k == "fatherson" || k == "fs") return Relation::father_son;
    if (k == "fatherdaughter" || k == "fd") return Relation::father_daughter;
    if (k == "motherson" || k == "ms") return Relation::mother_son;
    if (k == "motherdaughter" || k == "md") return Relation::mother_daughter;
    fail(ErrorCode::invalid_argument, "unknown relation '" + std::string(text) + "'");
}

std::string_view to_string(Label l) noexcept { return l == Label::kin ? "kin" : "non-kin"; }

Label parse_label(std::string_view text) {
    const std::string k = squash(text);
    if (k == "kin" || k == "1" || k == "positive" || k == "pos") return Label::kin;
    if (k == "nonkin" || k == "0" || k == "negative" || k == "neg") return Label::non_kin;
    fail(ErrorCode::invalid_argument, "unknown label '" + std::string(text) + "'");
}

std::vector<PairRecord> load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(bool(in), ErrorCode::io, "cannot open manifest " + path.string());
    const auto base = path.parent_path();

    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (header.empty() && std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
        if (!trim(line).empty()) header = split_csv(line);
    }
    require(!header.empty(), ErrorCode::invalid_argument, "manifest " + path.string() + " is empty");
    const std::vector<std::string> expected{"relation", "parent", "child", "label", "fold"};
    require(header.size() >= expected.size() &&
                std::equal(expected.begin(), expected.end(), header.begin()),
            ErrorCode::invalid_argument,
            "manifest header must start with relation,parent,child,label,fold");
    const bool has_crop = header.size() >= 8 && header[5] == "crop_x" && header[6] == "crop_y" &&
                          header[7] == "crop_side";

    std::vector<PairRecord> records;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto f = split_csv(line);
        const std::string where = "manifest line " + std::to_string(line_no);
        require(f.size() >= 5, ErrorCode::invalid_argument, where + ": expected at least 5 fields");

        PairRecord r;
        r.relation = parse_relation(f[0]);
        r.parent = (base / f[1]).lexically_normal();
        r.child = (base / f[2]).lexically_normal();
        r.label = parse_label(f[3]);
        r.fold = f[4].empty() ? 0 : parse_int(f[4], "fold", line_no);
        require(r.fold >= 0 && r.fold <= kFoldCount, ErrorCode::invalid_argument,
                where + ": fold " + f[4] + " outside [1, " + std::to_string(kFoldCount) + "]");
        require(r.parent != r.child, ErrorCode::invalid_argument,
                where + ": parent and child are the same file");
        if (has_crop && f.size() >= 8 && !(f[5].empty() && f[6].empty() && f[7].empty())) {
            CropWindow w{parse_int(f[5], "crop_x", line_no), parse_int(f[6], "crop_y", line_no),
                         parse_int(f[7], "crop_side", line_no)};
            r.parent_crop = w;
            r.child_crop = w;
        }
        for (const auto& p : {r.parent, r.child}) {
            std::error_code ec;
            require(std::filesystem::is_regular_file(p, ec), ErrorCode::io,
                    where + ": image not found: " + p.string());
        }
        records.push_back(std::move(r));
    }
    require(!records.empty(), ErrorCode::invalid_argument,
            "manifest " + path.string() + " has no pairs");
    return records;
}

void write_manifest(const std::filesystem::path& path, std::span<const PairRecord> records) {
    const auto base = path.parent_path();
    std::ostringstream out;
    out << "relation,parent,child,label,fold,crop_x,crop_y,crop_side\n";
    for (const auto& r : records) {
        require(r.parent_crop == r.child_crop, ErrorCode::invalid_argument,
                "manifest rows carry a single crop window for both images");
        out << to_string(r.relation) << ','
            << csv_field(r.parent.lexically_proximate(base).generic_string()) << ','
            << csv_field(r.child.lexically_proximate(base).generic_string()) << ','
            << to_string(r.label) << ',' << r.fold;
        if (r.parent_crop)
            out << ',' << r.parent_crop->x << ',' << r.parent_crop->y << ',' << r.parent_crop->side;
        else
            out << ",,,";
        out << '\n';
    }
    write_file_atomic(path, out.str());
}

std::vector<RelationShare> relation_distribution(std::span<const PairRecord> records) {
    std::vector<RelationShare> out;
    std::size_t total = 0;
    for (std::size_t i = 0; i < kRelations.size(); ++i)
        out.push_back({kRelations[i], 0, 0.0, kCornellRelationShare[i]});
    for (const auto& r : records)
        if (r.label == Label::kin) {
            ++out[std::size_t(r.relation)].count;
            ++total;
        }
    for (auto& s : out) s.percent = total ? 100.0 * double(s.count) / double(total) : 0.0;
    return out;
}

void assign_folds(std::vector<PairRecord>& records, std::uint64_t seed) {
    const auto unassigned =
        std::count_if(records.begin(), records.end(), [](const auto& r) { return r.fold == 0; });
    if (unassigned == 0) return;
    require(unassigned == std::ptrdiff_t(records.size()), ErrorCode::invalid_argument,
            "manifest mixes assigned and unassigned folds");
    for (Relation rel : kRelations) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < records.size(); ++i)
            if (records[i].relation == rel) idx.push_back(i);
        Rng rng(seed, std::uint64_t(rel));
        shuffle(idx, rng);
        for (std::size_t k = 0; k < idx.size(); ++k)
            records[idx[k]].fold = int(k % kFoldCount) + 1;
    }
}

std::vector<PairRecord> generate_negatives(std::span<const PairRecord> positives,
                                           std::uint64_t seed) {
    std::map<std::pair<Relation, int>, std::vector<std::size_t>> cells;
    for (std::size_t i = 0; i < positives.size(); ++i) {
        require(positives[i].label == Label::kin, ErrorCode::invalid_argument,
                "negative generation expects kin pairs only");
        require(positives[i].fold >= 1 && positives[i].fold <= kFoldCount,
                ErrorCode::invalid_argument, "negative generation needs assigned folds");
        cells[{positives[i].relation, positives[i].fold}].push_back(i);
    }

    std::vector<PairRecord> out(positives.size());
    for (const auto& [key, members] : cells) {
        const std::string cell =
            std::string(to_string(key.first)) + " fold " + std::to_string(key.second);
        require(members.size() >= 2, ErrorCode::invalid_argument,
                "cannot derange a single pair (" + cell + ")");
        Rng rng(seed, std::uint64_t(key.first) * 16 + std::uint64_t(key.second));
        std::vector<std::size_t> perm(members.size());
        bool ok = false;
        for (int attempt = 0; attempt < 1000 && !ok; ++attempt) {
            std::iota(perm.begin(), perm.end(), std::size_t{0});
            shuffle(perm, rng);
            ok = true;
            for (std::size_t k = 0; k < perm.size() && ok; ++k)
                ok = perm[k] != k && positives[members[perm[k]]].child != positives[members[k]].child;
        }
        require(ok, ErrorCode::invalid_argument, "no derangement of children exists for " + cell);
        for (std::size_t k = 0; k < members.size(); ++k) {
            const PairRecord& own = positives[members[k]];
            const PairRecord& donor = positives[members[perm[k]]];
            PairRecord neg = own;
            neg.child = donor.child;
            neg.child_crop = donor.child_crop;
            neg.label = Label::non_kin;
            out[members[k]] = std::move(neg);
        }
    }
    return out;
}

std::vector<PairRecord> shuffle_labels(std::span<const PairRecord> records, std::uint64_t seed) {
    std::vector<PairRecord> out(records.begin(), records.end());
    for (int fold = 0; fold <= kFoldCount; ++fold) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < out.size(); ++i)
            if (out[i].fold == fold) idx.push_back(i);
        std::vector<Label> labels;
        for (auto i : idx) labels.push_back(out[i].label);
        Rng rng(seed, std::uint64_t(fold));
        shuffle(labels, rng);
        for (std::size_t k = 0; k < idx.size(); ++k) out[idx[k]].label = labels[k];
    }
    return out;
}

std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const Label> labels) {
    require(scores.size() == labels.size(), ErrorCode::invalid_argument,
            "scores and labels differ in length");
    const auto pos = std::count(labels.begin(), labels.end(), Label::kin);
    const auto neg = std::ptrdiff_t(labels.size()) - pos;
    require(pos > 0 && neg > 0, ErrorCode::degenerate_input, "ROC needs both classes");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    std::vector<RocPoint> roc{{0.0, 0.0}};
    std::ptrdiff_t tp = 0, fp = 0;
    for (std::size_t k = 0; k < order.size(); ++k) {
        (labels[order[k]] == Label::kin ? tp : fp) += 1;
        // one point per distinct threshold
        if (k + 1 == order.size() || scores[order[k + 1]] != scores[order[k]])
            roc.push_back({double(fp) / double(neg), double(tp) / double(pos)});
    }
    return roc;
}

double equal_error_rate(std::span<const RocPoint> roc) {
    require(roc.size() >= 2, ErrorCode::invalid_argument, "ROC needs at least two points");
    auto gap = [](const RocPoint& p) { return p.false_accept + p.true_accept - 1.0; };
    for (std::size_t i = 0; i + 1 < roc.size(); ++i) {
        const double fa = gap(roc[i]);
        const double fb = gap(roc[i + 1]);
        if (fa <= 0.0 && fb >= 0.0) {
            const double alpha = fb == fa ? 0.0 : -fa / (fb - fa);
            const double far =
                roc[i].false_accept + alpha * (roc[i + 1].false_accept - roc[i].false_accept);
            const double tar =
                roc[i].true_accept + alpha * (roc[i + 1].true_accept - roc[i].true_accept);
            return 100.0 * 0.5 * (far + (1.0 - tar));
        }
    }
    fail(ErrorCode::invalid_argument, "ROC does not cross the equal-error line");
}

Metrics compute_metrics(std::span<const double> scores, std::span<const Label> labels,
                        std::span<const Relation> relations, const Threshold& threshold) {
    require(scores.size() == labels.size() && scores.size() == relations.size(),
            ErrorCode::invalid_argument, "scores, labels and relations differ in length");
    Metrics m;
    m.roc = roc_curve(scores, labels);
    m.eer = equal_error_rate(m.roc);

    std::size_t correct = 0;
    std::map<Relation, std::pair<std::size_t, std::size_t>> per;  // correct, total
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool hit = decide(scores[i], threshold) == labels[i];
        correct += hit ? 1 : 0;
        auto& cell = per[relations[i]];
        cell.first += hit ? 1 : 0;
        ++cell.second;
    }
    m.accuracy = 100.0 * double(correct) / double(scores.size());
    for (const auto& [rel, cell] : per)
        m.relation_accuracy[rel] = 100.0 * double(cell.first) / double(cell.second);
    return m;
}

}  // namespace kinverify
