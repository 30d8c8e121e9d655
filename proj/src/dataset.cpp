#include "passauth/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <unordered_set>

#include "json.hpp"

#include "passauth/errors.hpp"

namespace fs = std::filesystem;

namespace passauth::dataset {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string format_value(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string stream_filename(const std::string& user, const std::string& modality) {
    return user + "__" + modality + ".tsv";
}

// Active-second timeline for one user: 1 Hz runs separated by random gaps.
// Shared across modalities so windows from different sensors line up.
std::vector<std::int64_t> user_timeline(const SyntheticConfig& config,
                                        const std::string& user_id) {
    std::mt19937_64 rng(derive_seed(config.seed, "timeline", user_id));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> gap_len(2, 120);

    std::vector<std::int64_t> timeline;
    timeline.reserve(config.days * config.samples_per_day);
    constexpr std::int64_t kEpochBase = 1700000000;
    for (std::size_t day = 0; day < config.days; ++day) {
        std::int64_t t = kEpochBase + static_cast<std::int64_t>(day) * 86400;
        for (std::size_t n = 0; n < config.samples_per_day; ++n) {
            timeline.push_back(t);
            t += 1;
            if (unit(rng) < config.gap_probability) t += gap_len(rng);
        }
    }
    return timeline;
}

}  // namespace

const std::vector<ModalityDescriptor>& all_modalities() {
    static const std::vector<ModalityDescriptor> table = {
        {"keystroke", 3, false, 1.0},
        {"gps", 2, false, 1.0},
        {"accelerometer", 3, true, 1.0},
        {"gyroscope", 3, true, 1.0},
        {"magnetometer", 3, true, 1.0},
        {"linear_accelerometer", 3, true, 1.0},
        {"gravity", 3, true, 1.0},
        {"rotation", 3, true, 1.0},
    };
    return table;
}

const ModalityDescriptor& descriptor_for(const std::string& name) {
    for (const auto& d : all_modalities())
        if (d.name == name) return d;
    std::string known;
    for (const auto& d : all_modalities()) known += " " + d.name;
    throw ConfigError("unknown modality '" + name + "'; valid names:" + known);
}

bool is_known_modality(const std::string& name) {
    for (const auto& d : all_modalities())
        if (d.name == name) return true;
    return false;
}

std::uint64_t derive_seed(std::uint64_t base, const std::string& a,
                          const std::string& b) {
    std::uint64_t h = splitmix64(base ^ fnv1a(a));
    if (!b.empty()) h = splitmix64(h ^ fnv1a(b));
    return h;
}

UserModalityProfile profile_for(const SyntheticConfig& config,
                                std::size_t user_index, const std::string& modality) {
    const auto& desc = descriptor_for(modality);
    const std::string user_id = "u" + std::to_string(user_index);
    std::mt19937_64 rng(derive_seed(config.seed, "profile:" + user_id, modality));
    std::uniform_real_distribution<double> jitter(-0.05, 0.05);

    // Golden-ratio lattice keyed by (user, channel, modality). The channel
    // multiplier makes inter-user differences differ per channel, so part of
    // each identity survives in channel contrasts, which the common-mode
    // drift cannot mask.
    constexpr double kPhi = 0.618033988749895;
    const double modality_shift =
        static_cast<double>(fnv1a(modality) % 997) / 997.0;
    auto lattice = [&](std::size_t d, double quantity_shift) {
        double f = std::fmod(kPhi * static_cast<double>(user_index + 1) *
                                     static_cast<double>(d + 1) +
                                 quantity_shift + modality_shift,
                             1.0);
        return f + jitter(rng) * 0.2;  // +-1% of the range
    };
    auto span = [](double f, double lo, double hi) {
        return lo + (hi - lo) * std::clamp(f, 0.0, 1.0);
    };

    UserModalityProfile p;
    p.noise_scale = config.noise_scale;
    p.drift_scale = config.drift_scale;
    p.gap_probability = config.gap_probability;
    p.base_offsets.resize(desc.channel_count);
    p.oscillation_frequencies.resize(desc.channel_count);
    p.oscillation_amplitudes.resize(desc.channel_count);

    if (modality == "gps") {
        // Identity must survive the per-stream mean centering applied to GPS,
        // so it lives in the loop amplitude and frequency, not the base point.
        std::uniform_real_distribution<double> lat(-60.0, 60.0);
        std::uniform_real_distribution<double> lon(-180.0, 180.0);
        p.base_offsets[0] = lat(rng);
        p.base_offsets[1] = lon(rng);
        for (std::size_t d = 0; d < desc.channel_count; ++d) {
            p.oscillation_frequencies[d] = span(lattice(d, 0.35), 0.02, 0.3);
            p.oscillation_amplitudes[d] = span(lattice(d, 0.7), 0.03, 0.3);
        }
        return p;
    }

    for (std::size_t d = 0; d < desc.channel_count; ++d) {
        p.base_offsets[d] = span(lattice(d, 0.0), -0.2, 0.2);
        p.oscillation_frequencies[d] = span(lattice(d, 0.35), 0.05, 0.45);
        p.oscillation_amplitudes[d] = span(lattice(d, 0.7), 0.04, 0.1);
    }
    return p;
}

Corpus generate_synthetic(const SyntheticConfig& config) {
    if (config.n_users < 2)
        throw ConfigError("generate_synthetic: need at least 2 users to form pairs");
    if (config.days < 1) throw ConfigError("generate_synthetic: days must be >= 1");

    std::vector<std::string> modality_names = config.modalities;
    if (modality_names.empty())
        for (const auto& d : all_modalities()) modality_names.push_back(d.name);
    for (const auto& name : modality_names) descriptor_for(name);

    Corpus corpus;
    for (std::size_t u = 0; u < config.n_users; ++u) {
        const std::string user_id = "u" + std::to_string(u);
        const auto timeline = user_timeline(config, user_id);

        for (const auto& modality : modality_names) {
            const auto& desc = descriptor_for(modality);
            const auto profile = profile_for(config, u, modality);
            std::mt19937_64 rng(derive_seed(config.seed, "stream:" + user_id, modality));
            std::normal_distribution<double> gauss(0.0, 1.0);
            std::uniform_real_distribution<double> phase_dist(0.0,
                                                             2.0 * std::numbers::pi);
            std::uniform_int_distribution<int> event_count(1, 3);

            Vector phases(desc.channel_count);
            for (auto& ph : phases) ph = phase_dist(rng);

            // Slowly varying common-mode drift: stationary over ~minutes, so
            // it is near constant inside one window but decorrelates across
            // windows. It carries no identity.
            double drift = profile.drift_scale * gauss(rng);

            RecordStream stream;
            std::int64_t prev_ts = timeline.empty() ? 0 : timeline.front();
            for (std::int64_t ts : timeline) {
                const double dt = static_cast<double>(ts - prev_ts);
                prev_ts = ts;
                if (dt > 0.0 && profile.drift_scale > 0.0) {
                    const double rho = std::exp(-dt / 60.0);
                    drift = rho * drift + profile.drift_scale *
                                              std::sqrt(1.0 - rho * rho) * gauss(rng);
                }

                auto channel_value = [&](std::size_t d) {
                    const double osc =
                        profile.oscillation_amplitudes[d] *
                        std::sin(2.0 * std::numbers::pi *
                                     profile.oscillation_frequencies[d] *
                                     static_cast<double>(ts) +
                                 phases[d]);
                    return profile.base_offsets[d] + osc + drift;
                };

                const int events = (modality == "keystroke") ? event_count(rng) : 1;
                for (int e = 0; e < events; ++e) {
                    SensorRecord rec;
                    rec.user_id = user_id;
                    rec.modality = modality;
                    rec.timestamp = ts;
                    rec.channels.resize(desc.channel_count);
                    for (std::size_t d = 0; d < desc.channel_count; ++d)
                        rec.channels[d] =
                            channel_value(d) + profile.noise_scale * gauss(rng);
                    stream.push_back(std::move(rec));
                }
            }
            corpus[{user_id, modality}] = std::move(stream);
        }
    }
    return corpus;
}

void save_records(const RecordStream& stream, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("save_records: cannot open " + path);
    for (const auto& rec : stream) {
        out << rec.user_id << '\t' << rec.modality << '\t' << rec.timestamp << '\t';
        for (std::size_t d = 0; d < rec.channels.size(); ++d) {
            if (d) out << ',';
            out << format_value(rec.channels[d]);
        }
        out << '\n';
    }
    if (!out) throw DataError("save_records: write failed for " + path);
}

RecordStream load_records(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("load_records: cannot open " + path);

    RecordStream stream;
    std::string line;
    std::size_t line_no = 0;
    std::int64_t prev_ts = 0;
    bool have_prev = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fail = [&](const std::string& why) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": " + why);
        };

        std::vector<std::string> fields;
        std::size_t start = 0;
        for (std::size_t pos = line.find('\t'); pos != std::string::npos;
             pos = line.find('\t', start)) {
            fields.push_back(line.substr(start, pos - start));
            start = pos + 1;
        }
        fields.push_back(line.substr(start));
        if (fields.size() != 4) fail("expected 4 tab-separated fields");

        SensorRecord rec;
        rec.user_id = fields[0];
        rec.modality = fields[1];
        if (!is_known_modality(rec.modality)) fail("unknown modality " + rec.modality);
        try {
            rec.timestamp = std::stoll(fields[2]);
        } catch (const std::exception&) {
            fail("bad timestamp " + fields[2]);
        }
        if (have_prev && rec.timestamp < prev_ts)
            fail("timestamp regression (" + std::to_string(rec.timestamp) + " after " +
                 std::to_string(prev_ts) + ")");
        prev_ts = rec.timestamp;
        have_prev = true;

        std::stringstream values(fields[3]);
        std::string tok;
        while (std::getline(values, tok, ',')) {
            char* end = nullptr;
            const double v = std::strtod(tok.c_str(), &end);
            if (end == tok.c_str() || *end != '\0') fail("bad value '" + tok + "'");
            if (!std::isfinite(v)) fail("non-finite value '" + tok + "'");
            rec.channels.push_back(v);
        }
        if (rec.channels.size() != descriptor_for(rec.modality).channel_count)
            fail("expected " +
                 std::to_string(descriptor_for(rec.modality).channel_count) +
                 " channels, got " + std::to_string(rec.channels.size()));
        stream.push_back(std::move(rec));
    }
    return stream;
}

void save_corpus(const Corpus& corpus, const std::string& dir) {
    fs::create_directories(dir);
    nlohmann::ordered_json manifest;
    std::set<std::string> users, modalities;
    std::size_t total = 0;
    nlohmann::ordered_json counts = nlohmann::ordered_json::object();
    for (const auto& [key, stream] : corpus) {
        const auto file = stream_filename(key.first, key.second);
        save_records(stream, (fs::path(dir) / file).string());
        users.insert(key.first);
        modalities.insert(key.second);
        counts[file] = stream.size();
        total += stream.size();
    }
    manifest["users"] = users;
    manifest["modalities"] = modalities;
    manifest["record_counts"] = counts;
    manifest["total_records"] = total;
    std::ofstream out(fs::path(dir) / "manifest.json");
    if (!out) throw DataError("save_corpus: cannot write manifest in " + dir);
    out << manifest.dump(2) << '\n';
}

Corpus load_corpus(const std::string& dir) {
    if (!fs::is_directory(dir)) throw DataError("load_corpus: not a directory: " + dir);
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.path().extension() == ".tsv") files.push_back(entry.path());
    std::sort(files.begin(), files.end());

    Corpus corpus;
    for (const auto& file : files) {
        auto records = load_records(file.string());
        for (auto& rec : records) {
            StreamKey key{rec.user_id, rec.modality};
            corpus[key].push_back(std::move(rec));
        }
    }
    for (auto& [key, stream] : corpus) {
        for (std::size_t i = 1; i < stream.size(); ++i)
            if (stream[i].timestamp < stream[i - 1].timestamp)
                throw DataError("load_corpus: timestamp regression in stream " +
                                key.first + "/" + key.second);
    }
    return corpus;
}

std::vector<std::string> corpus_users(const Corpus& corpus) {
    std::set<std::string> users;
    for (const auto& [key, stream] : corpus) users.insert(key.first);
    return {users.begin(), users.end()};
}

RecordStream aggregate_to_grid(const RecordStream& stream) {
    RecordStream out;
    std::size_t i = 0;
    while (i < stream.size()) {
        std::size_t j = i + 1;
        while (j < stream.size() && stream[j].timestamp == stream[i].timestamp) ++j;
        SensorRecord merged = stream[i];
        if (j - i > 1) {
            for (std::size_t k = i + 1; k < j; ++k)
                for (std::size_t d = 0; d < merged.channels.size(); ++d)
                    merged.channels[d] += stream[k].channels[d];
            const double inv = 1.0 / static_cast<double>(j - i);
            for (double& v : merged.channels) v *= inv;
        }
        out.push_back(std::move(merged));
        i = j;
    }
    return out;
}

std::vector<RecordStream> split_runs(const RecordStream& stream) {
    std::vector<RecordStream> runs;
    RecordStream current;
    for (const auto& rec : stream) {
        if (!current.empty() && rec.timestamp - current.back().timestamp > 1) {
            runs.push_back(std::move(current));
            current.clear();
        }
        current.push_back(rec);
    }
    if (!current.empty()) runs.push_back(std::move(current));
    return runs;
}

std::vector<FoldSpec> split_folds(std::vector<std::string> users, std::size_t k,
                                  std::uint64_t seed) {
    if (k < 2) throw ConfigError("split_folds: k must be >= 2");
    if (k > users.size())
        throw ConfigError("split_folds: k=" + std::to_string(k) + " exceeds " +
                          std::to_string(users.size()) + " users");
    std::sort(users.begin(), users.end());
    std::mt19937_64 rng(derive_seed(seed, "folds"));
    std::shuffle(users.begin(), users.end(), rng);

    std::vector<FoldSpec> folds;
    const std::size_t base = users.size() / k;
    const std::size_t remainder = users.size() % k;
    std::size_t cursor = 0;
    for (std::size_t f = 0; f < k; ++f) {
        const std::size_t size = base + (f < remainder ? 1 : 0);
        FoldSpec fold;
        fold.fold_index = f;
        fold.test_users.assign(users.begin() + cursor, users.begin() + cursor + size);
        cursor += size;
        for (const auto& u : users)
            if (std::find(fold.test_users.begin(), fold.test_users.end(), u) ==
                fold.test_users.end())
                fold.train_users.push_back(u);
        std::sort(fold.test_users.begin(), fold.test_users.end());
        std::sort(fold.train_users.begin(), fold.train_users.end());
        folds.push_back(std::move(fold));
    }
    return folds;
}

std::vector<IndexPair> make_index_pairs(
    const std::map<std::string, std::size_t>& count_by_user,
    std::size_t max_genuine_per_user, std::uint64_t seed) {
    std::vector<std::string> pairable;  // >= 2 segments
    std::vector<std::string> populated;  // >= 1 segment
    for (const auto& [user, count] : count_by_user) {
        if (count >= 1) populated.push_back(user);
        if (count >= 2) pairable.push_back(user);
    }
    if (pairable.empty())
        throw DataError("make_pairs: no user has at least 2 segments");
    if (populated.size() < 2)
        throw DataError("make_pairs: need at least 2 users with segments");

    std::mt19937_64 rng(derive_seed(seed, "pairs"));
    std::vector<IndexPair> pairs;

    for (const auto& user : pairable) {
        const std::size_t n = count_by_user.at(user);
        const std::size_t total = n * (n - 1) / 2;
        std::vector<std::size_t> chosen;
        if (max_genuine_per_user == 0 || total <= max_genuine_per_user) {
            chosen.resize(total);
            for (std::size_t t = 0; t < total; ++t) chosen[t] = t;
        } else {
            std::unordered_set<std::size_t> seen;
            std::uniform_int_distribution<std::size_t> pick(0, total - 1);
            while (seen.size() < max_genuine_per_user) seen.insert(pick(rng));
            chosen.assign(seen.begin(), seen.end());
            std::sort(chosen.begin(), chosen.end());
        }

        // Decode lexicographic pair id t -> (i, j), i < j.
        std::size_t i = 0, consumed = 0;
        for (std::size_t t : chosen) {
            while (t >= consumed + (n - 1 - i)) {
                consumed += n - 1 - i;
                ++i;
            }
            const std::size_t j = i + 1 + (t - consumed);
            pairs.push_back({user, i, user, j, 0});
        }

        // One impostor pair per retained genuine pair: the left element
        // paired with a uniform segment of a uniform other user.
        const std::size_t first_genuine = pairs.size() - chosen.size();
        const std::size_t genuine_count = chosen.size();
        for (std::size_t g = 0; g < genuine_count; ++g) {
            const IndexPair gp = pairs[first_genuine + g];
            std::string other;
            std::uniform_int_distribution<std::size_t> pick_user(
                0, populated.size() - 1);
            do {
                other = populated[pick_user(rng)];
            } while (other == user);
            std::uniform_int_distribution<std::size_t> pick_idx(
                0, count_by_user.at(other) - 1);
            pairs.push_back({user, gp.index_a, other, pick_idx(rng), 1});
        }
    }
    return pairs;
}

std::vector<SegmentPair> make_pairs(
    const std::map<std::string, std::vector<signal::FeatureSegment>>& by_user,
    std::size_t max_genuine_per_user, std::uint64_t seed) {
    std::map<std::string, std::size_t> counts;
    for (const auto& [user, segs] : by_user) counts[user] = segs.size();
    const auto index_pairs = make_index_pairs(counts, max_genuine_per_user, seed);

    std::vector<SegmentPair> pairs;
    pairs.reserve(index_pairs.size());
    for (const auto& ip : index_pairs) {
        SegmentPair p;
        p.a = by_user.at(ip.user_a)[ip.index_a];
        p.b = by_user.at(ip.user_b)[ip.index_b];
        p.label = ip.label;
        pairs.push_back(std::move(p));
    }
    return pairs;
}

}  // namespace passauth::dataset
