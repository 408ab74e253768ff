#include "robustify/dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "robustify/errors.hpp"
#include "robustify/image.hpp"

namespace robustify {

using nlohmann::json;

const char* to_string(Provenance p) {
    switch (p) {
        case Provenance::kClean: return "clean";
        case Provenance::kAdversarial: return "adversarial";
        case Provenance::kCorrupted: return "corrupted";
    }
    return "?";
}

Provenance provenance_from_string(const std::string& s) {
    if (s == "clean") return Provenance::kClean;
    if (s == "adversarial") return Provenance::kAdversarial;
    if (s == "corrupted") return Provenance::kCorrupted;
    throw FormatError("unknown provenance '" + s + "'");
}

void LabeledDataset::validate() const {
    const auto n = static_cast<std::size_t>(images.n);
    if (labels.size() != n || provenance.size() != n || source_index.size() != n)
        throw FormatError("LabeledDataset: per-sample arrays disagree on length");
    if (!info.empty() && info.size() != n)
        throw FormatError("LabeledDataset: info must be empty or per-sample");
    for (float v : images.data)
        if (!(v >= 0.0f && v <= 1.0f))
            throw FormatError("LabeledDataset: pixel outside [0,1]");
}

LabeledDataset LabeledDataset::subset(const std::vector<int>& indices) const {
    LabeledDataset out;
    out.images = Tensor(static_cast<int>(indices.size()), images.h, images.w, images.c);
    out.labels.reserve(indices.size());
    out.provenance.reserve(indices.size());
    out.source_index.reserve(indices.size());
    if (!info.empty()) out.info.reserve(indices.size());
    int row = 0;
    for (int idx : indices) {
        if (idx < 0 || idx >= size()) throw ConfigError("subset: index out of range");
        const float* src = images.sample(idx);
        std::copy(src, src + images.sample_size(), out.images.sample(row++));
        out.labels.push_back(labels[static_cast<std::size_t>(idx)]);
        out.provenance.push_back(provenance[static_cast<std::size_t>(idx)]);
        out.source_index.push_back(source_index[static_cast<std::size_t>(idx)]);
        if (!info.empty()) out.info.push_back(info[static_cast<std::size_t>(idx)]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// CIFAR binary I/O

namespace {
constexpr int kSide = 32;
constexpr int kChannels = 3;
constexpr int kPlane = kSide * kSide;

void decode_record(const std::uint8_t* rec, float* pixels) {
    // channel-major input -> interleaved HWC
    for (int ch = 0; ch < kChannels; ++ch)
        for (int p = 0; p < kPlane; ++p)
            pixels[static_cast<std::size_t>(p) * kChannels + ch] =
                static_cast<float>(rec[1 + ch * kPlane + p]) / 255.0f;
}
} // namespace

LabeledDataset load_cifar10_binary(const std::vector<std::string>& paths) {
    if (paths.empty()) throw ConfigError("load_cifar10_binary: no input files");
    std::vector<std::vector<std::uint8_t>> files;
    std::size_t total_records = 0;
    for (const auto& path : paths) {
        std::ifstream f(path, std::ios::binary | std::ios::ate);
        if (!f) throw FormatError("cannot open dataset file " + path);
        const auto bytes = static_cast<std::size_t>(f.tellg());
        if (bytes % kCifarRecordBytes != 0)
            throw FormatError("truncated dataset file " + path + ": stray bytes at offset " +
                              std::to_string(bytes - bytes % kCifarRecordBytes));
        f.seekg(0);
        std::vector<std::uint8_t> buf(bytes);
        f.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(bytes));
        if (f.gcount() != static_cast<std::streamsize>(bytes))
            throw FormatError("short read on " + path);
        total_records += bytes / kCifarRecordBytes;
        files.push_back(std::move(buf));
    }
    LabeledDataset ds;
    ds.images = Tensor(static_cast<int>(total_records), kSide, kSide, kChannels);
    ds.labels.reserve(total_records);
    ds.provenance.assign(total_records, Provenance::kClean);
    ds.source_index.resize(total_records);
    std::iota(ds.source_index.begin(), ds.source_index.end(), 0);
    int row = 0;
    for (std::size_t fi = 0; fi < files.size(); ++fi) {
        const auto& buf = files[fi];
        for (std::size_t off = 0; off < buf.size(); off += kCifarRecordBytes) {
            const std::uint8_t label = buf[off];
            if (label > 9)
                throw FormatError("label byte " + std::to_string(label) + " > 9 in " +
                                  paths[fi] + " at offset " + std::to_string(off));
            ds.labels.push_back(label);
            decode_record(buf.data() + off, ds.images.sample(row++));
        }
    }
    return ds;
}

namespace {

json manifest_record(const LabeledDataset& ds, int i) {
    json rec{{"index", i},
             {"source_index", ds.source_index[static_cast<std::size_t>(i)]},
             {"label", ds.labels[static_cast<std::size_t>(i)]},
             {"provenance", to_string(ds.provenance[static_cast<std::size_t>(i)])}};
    if (!ds.info.empty()) {
        const SampleInfo& si = ds.info[static_cast<std::size_t>(i)];
        if (ds.provenance[static_cast<std::size_t>(i)] == Provenance::kCorrupted &&
            si.corruption) {
            rec["corruption"] = {{"kind", to_string(si.corruption->kind)},
                                 {"severity", si.corruption->severity},
                                 {"seed", si.corruption->seed}};
        } else if (ds.provenance[static_cast<std::size_t>(i)] == Provenance::kAdversarial) {
            rec["attack"] = {{"eps_linf", si.eps_linf},
                             {"eps_l2", si.eps_l2},
                             {"achieved_linf", si.achieved_linf},
                             {"achieved_l2", si.achieved_l2},
                             {"seed_linf", si.attack_seed_linf},
                             {"seed_l2", si.attack_seed_l2}};
        }
    }
    return rec;
}

} // namespace

void save_dataset(const LabeledDataset& ds, const std::string& path) {
    ds.validate();
    if (ds.images.h != kSide || ds.images.w != kSide || ds.images.c != kChannels)
        throw FormatError("save_dataset: record layout requires 32x32x3 images, got " +
                          ds.images.shape_str());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw FormatError("save_dataset: cannot open " + path);
    std::vector<std::uint8_t> rec(kCifarRecordBytes);
    for (int i = 0; i < ds.size(); ++i) {
        rec[0] = static_cast<std::uint8_t>(ds.labels[static_cast<std::size_t>(i)]);
        const float* px = ds.images.sample(i);
        for (int ch = 0; ch < kChannels; ++ch)
            for (int p = 0; p < kPlane; ++p)
                rec[1 + static_cast<std::size_t>(ch) * kPlane + p] =
                    quantize_pixel(px[static_cast<std::size_t>(p) * kChannels + ch]);
        f.write(reinterpret_cast<const char*>(rec.data()), kCifarRecordBytes);
    }
    if (!f) throw FormatError("save_dataset: write failed for " + path);
    std::ofstream m(path + ".manifest.jsonl");
    if (!m) throw FormatError("save_dataset: cannot open manifest for " + path);
    for (int i = 0; i < ds.size(); ++i) m << manifest_record(ds, i).dump() << "\n";
    if (!m) throw FormatError("save_dataset: manifest write failed for " + path);
}

LabeledDataset load_dataset(const std::string& path) {
    LabeledDataset ds = load_cifar10_binary({path});
    const std::string manifest_path = path + ".manifest.jsonl";
    if (!std::filesystem::exists(manifest_path)) return ds;
    std::ifstream m(manifest_path);
    if (!m) throw FormatError("load_dataset: cannot open " + manifest_path);
    ds.info.assign(static_cast<std::size_t>(ds.size()), SampleInfo{});
    std::string line;
    int i = 0;
    while (std::getline(m, line)) {
        if (line.empty()) continue;
        if (i >= ds.size())
            throw FormatError("load_dataset: manifest longer than dataset in " + manifest_path);
        const json rec = json::parse(line, nullptr, false);
        if (rec.is_discarded())
            throw FormatError("load_dataset: malformed manifest line " + std::to_string(i + 1));
        ds.source_index[static_cast<std::size_t>(i)] = rec.at("source_index").get<std::int64_t>();
        ds.provenance[static_cast<std::size_t>(i)] =
            provenance_from_string(rec.at("provenance").get<std::string>());
        SampleInfo& si = ds.info[static_cast<std::size_t>(i)];
        if (rec.contains("corruption")) {
            const auto& c = rec.at("corruption");
            si.corruption = CorruptionSpec{
                corruption_kind_from_string(c.at("kind").get<std::string>()),
                c.at("severity").get<int>(), c.at("seed").get<std::uint64_t>()};
        }
        if (rec.contains("attack")) {
            const auto& a = rec.at("attack");
            si.eps_linf = a.at("eps_linf").get<double>();
            si.eps_l2 = a.at("eps_l2").get<double>();
            si.achieved_linf = a.at("achieved_linf").get<double>();
            si.achieved_l2 = a.at("achieved_l2").get<double>();
            si.attack_seed_linf = a.at("seed_linf").get<std::uint64_t>();
            si.attack_seed_l2 = a.at("seed_l2").get<std::uint64_t>();
        }
        ++i;
    }
    if (i != ds.size())
        throw FormatError("load_dataset: manifest has " + std::to_string(i) + " records for " +
                          std::to_string(ds.size()) + " samples");
    return ds;
}

// ---------------------------------------------------------------------------
// cap & split

namespace {
std::vector<int> shuffled_indices(int n, Rng& rng) {
    std::vector<int> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = n - 1; i > 0; --i)
        std::swap(idx[static_cast<std::size_t>(i)],
                  idx[static_cast<std::size_t>(rng.uniform_int(static_cast<std::uint64_t>(i + 1)))]);
    return idx;
}
} // namespace

LabeledDataset cap_dataset(const LabeledDataset& dataset, int n, Rng& rng) {
    if (n < 0 || n > dataset.size())
        throw ConfigError("cap_dataset: n=" + std::to_string(n) + " exceeds dataset size " +
                          std::to_string(dataset.size()));
    std::vector<int> idx = shuffled_indices(dataset.size(), rng);
    idx.resize(static_cast<std::size_t>(n));
    std::sort(idx.begin(), idx.end());
    return dataset.subset(idx);
}

void SplitRatio::validate() const {
    if (alpha1 < 0.0 || alpha2 < 0.0 || alpha3 < 0.0)
        throw ConfigError("split ratio parts must be non-negative");
    if (alpha1 + alpha2 + alpha3 <= 0.0)
        throw ConfigError("split ratio must have a positive sum");
}

SplitRatio SplitRatio::parse(const std::string& text) {
    SplitRatio r;
    const auto p1 = text.find(':');
    const auto p2 = text.find(':', p1 == std::string::npos ? p1 : p1 + 1);
    if (p1 == std::string::npos || p2 == std::string::npos)
        throw ConfigError("split ratio must look like a1:a2:a3, got '" + text + "'");
    try {
        r.alpha1 = std::stod(text.substr(0, p1));
        r.alpha2 = std::stod(text.substr(p1 + 1, p2 - p1 - 1));
        r.alpha3 = std::stod(text.substr(p2 + 1));
    } catch (const std::exception&) {
        throw ConfigError("split ratio has non-numeric parts: '" + text + "'");
    }
    r.validate();
    return r;
}

std::string SplitRatio::str() const {
    auto fmt = [](double v) {
        std::string s = std::to_string(v);
        s.erase(s.find_last_not_of('0') + 1);
        if (!s.empty() && s.back() == '.') s.pop_back();
        return s;
    };
    return fmt(alpha1) + ":" + fmt(alpha2) + ":" + fmt(alpha3);
}

std::array<int, 3> split_sizes(int n, const SplitRatio& ratio) {
    ratio.validate();
    const double total = ratio.alpha1 + ratio.alpha2 + ratio.alpha3;
    const double exact[3] = {n * ratio.alpha1 / total, n * ratio.alpha2 / total,
                             n * ratio.alpha3 / total};
    std::array<int, 3> sizes{};
    double rem[3];
    int assigned = 0;
    for (int i = 0; i < 3; ++i) {
        sizes[static_cast<std::size_t>(i)] = static_cast<int>(std::floor(exact[i]));
        rem[i] = exact[i] - sizes[static_cast<std::size_t>(i)];
        assigned += sizes[static_cast<std::size_t>(i)];
    }
    // largest remainder; ties to the lower part index
    for (int left = n - assigned; left > 0; --left) {
        int best = 0;
        for (int i = 1; i < 3; ++i)
            if (rem[i] > rem[best]) best = i;
        sizes[static_cast<std::size_t>(best)] += 1;
        rem[best] = -1.0;
    }
    return sizes;
}

std::tuple<LabeledDataset, LabeledDataset, LabeledDataset> split_dataset(
    const LabeledDataset& dataset, const SplitRatio& ratio, Rng& rng) {
    const std::array<int, 3> sizes = split_sizes(dataset.size(), ratio);
    const std::vector<int> perm = shuffled_indices(dataset.size(), rng);
    std::array<std::vector<int>, 3> parts;
    int cursor = 0;
    for (int p = 0; p < 3; ++p) {
        auto& part = parts[static_cast<std::size_t>(p)];
        part.assign(perm.begin() + cursor, perm.begin() + cursor + sizes[static_cast<std::size_t>(p)]);
        std::sort(part.begin(), part.end());
        cursor += sizes[static_cast<std::size_t>(p)];
    }
    return {dataset.subset(parts[0]), dataset.subset(parts[1]), dataset.subset(parts[2])};
}

} // namespace robustify
