// Copyright (c) 2026, The plmft Authors
// SPDX-License-Identifier: Apache-2.0

#include "plm/data.hpp"

#include "plm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace plm {

std::string task_kind_name(TaskKind k) {
    switch (k) {
    case TaskKind::kSeqMultilabel: return "seq-multilabel";
    case TaskKind::kSeqMulticlass: return "seq-multiclass";
    case TaskKind::kTokenMulticlass: return "token-multiclass";
    case TaskKind::kSeqRegression: return "seq-regression";
    }
    return "?";
}

TaskKind parse_task_kind(const std::string &s) {
    for (auto k : {TaskKind::kSeqMultilabel, TaskKind::kSeqMulticlass, TaskKind::kTokenMulticlass, TaskKind::kSeqRegression})
        if (task_kind_name(k) == s) return k;
    throw ConfigError("unknown task kind '" + s + "'");
}

std::string loss_name(LossKind k) {
    switch (k) {
    case LossKind::kMlBce: return "ml-bce";
    case LossKind::kCrossEntropy: return "ce";
    case LossKind::kMse: return "mse";
    }
    return "?";
}

std::string metric_name(MetricKind m) {
    switch (m) {
    case MetricKind::kF1Max: return "f1max";
    case MetricKind::kAccuracy: return "accuracy";
    case MetricKind::kSpearman: return "spearman";
    case MetricKind::kR2: return "r2";
    }
    return "?";
}

MetricKind parse_metric(const std::string &s) {
    for (auto m : {MetricKind::kF1Max, MetricKind::kAccuracy, MetricKind::kSpearman, MetricKind::kR2})
        if (metric_name(m) == s) return m;
    throw ConfigError("unknown metric '" + s + "'");
}

TaskSpec make_task(const std::string &name, TaskKind kind, std::size_t num_classes, MetricKind regression_metric) {
    TaskSpec t;
    t.name = name;
    t.kind = kind;
    switch (kind) {
    case TaskKind::kSeqMultilabel:
        t.num_classes = num_classes;
        t.loss = LossKind::kMlBce;
        t.metric = MetricKind::kF1Max;
        t.standardize = false;
        break;
    case TaskKind::kSeqMulticlass:
    case TaskKind::kTokenMulticlass:
        t.num_classes = num_classes;
        t.loss = LossKind::kCrossEntropy;
        t.metric = MetricKind::kAccuracy;
        t.standardize = false;
        break;
    case TaskKind::kSeqRegression:
        t.num_classes = 1;
        t.loss = LossKind::kMse;
        t.metric = regression_metric;
        t.standardize = true;
        break;
    }
    t.validate();
    return t;
}

void TaskSpec::validate() const {
    switch (kind) {
    case TaskKind::kSeqMultilabel:
        if (num_classes < 1) throw ConfigError("multi-label task needs at least one class");
        if (loss != LossKind::kMlBce || metric != MetricKind::kF1Max)
            throw ConfigError("multi-label tasks use ml-bce loss and f1max metric");
        break;
    case TaskKind::kSeqMulticlass:
    case TaskKind::kTokenMulticlass:
        if (num_classes < 2) throw ConfigError("multi-class task needs at least two classes");
        if (kind == TaskKind::kTokenMulticlass && num_classes > 10)
            throw ConfigError("token-level labels are single digits; at most 10 classes");
        if (loss != LossKind::kCrossEntropy || metric != MetricKind::kAccuracy)
            throw ConfigError("multi-class tasks use ce loss and accuracy metric");
        break;
    case TaskKind::kSeqRegression:
        if (num_classes != 1) throw ConfigError("regression tasks have a single output");
        if (loss != LossKind::kMse || (metric != MetricKind::kSpearman && metric != MetricKind::kR2))
            throw ConfigError("regression tasks use mse loss and spearman or r2 metric");
        break;
    }
}

namespace {

std::string read_file(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> split_lines(const std::string &text) {
    std::vector<std::string> lines;
    std::string line;
    std::istringstream in(text);
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

std::string trim(const std::string &s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string &s, char delim) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == delim) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

std::size_t parse_index(const std::string &s, const std::string &where) {
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
        v = std::stoull(s, &pos);
    } catch (const std::exception &) {
        throw DataError(where + ": '" + s + "' is not a class index");
    }
    if (pos != s.size() || s.empty() || s[0] == '-') throw DataError(where + ": '" + s + "' is not a class index");
    return static_cast<std::size_t>(v);
}

} // namespace

std::vector<FastaEntry> parse_fasta(const std::string &text) {
    std::vector<FastaEntry> entries;
    const auto lines = split_lines(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::string line = trim(lines[i]);
        if (line.empty()) continue;
        if (line[0] == '>') {
            const std::string header = line.substr(1);
            const auto ws = header.find_first_of(" \t");
            entries.push_back({header.substr(0, ws), ""});
            if (entries.back().id.empty()) throw DataError("FASTA line " + std::to_string(i + 1) + ": empty record id");
        } else {
            if (entries.empty()) throw DataError("FASTA parse error at line " + std::to_string(i + 1) + ": sequence data before any header");
            entries.back().sequence += line;
        }
    }
    if (entries.empty()) throw DataError("FASTA input contains no records");
    return entries;
}

std::vector<FastaEntry> load_fasta(const std::filesystem::path &path) {
    try {
        return parse_fasta(read_file(path));
    } catch (const DataError &e) {
        throw DataError(path.string() + ": " + std::string(e.what()).substr(std::string("data error: ").size()));
    }
}

void write_fasta(const std::filesystem::path &path, const std::vector<FastaEntry> &entries, std::size_t wrap) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    for (const auto &e : entries) {
        out << '>' << e.id << '\n';
        for (std::size_t i = 0; i < e.sequence.size(); i += wrap) out << e.sequence.substr(i, wrap) << '\n';
    }
}

void validate_record(const Record &r, const TaskSpec &spec, const std::string &where) {
    if (r.sequence.empty()) throw DataError(where + ": empty sequence");
    switch (spec.kind) {
    case TaskKind::kSeqMultilabel: {
        const auto *bits = std::get_if<std::vector<double>>(&r.label);
        if (!bits || bits->size() != spec.num_classes) throw DataError(where + ": expected a multi-label vector");
        break;
    }
    case TaskKind::kSeqMulticlass: {
        const auto *c = std::get_if<std::size_t>(&r.label);
        if (!c) throw DataError(where + ": expected a class index");
        if (*c >= spec.num_classes)
            throw DataError(where + ": class index " + std::to_string(*c) + " >= " + std::to_string(spec.num_classes));
        break;
    }
    case TaskKind::kTokenMulticlass: {
        const auto *t = std::get_if<std::vector<std::size_t>>(&r.label);
        if (!t) throw DataError(where + ": expected per-residue classes");
        if (t->size() != r.sequence.size())
            throw DataError(where + ": " + std::to_string(t->size()) + " token labels for " + std::to_string(r.sequence.size()) +
                            " residues");
        for (auto c : *t)
            if (c >= spec.num_classes) throw DataError(where + ": class index " + std::to_string(c) + " >= " + std::to_string(spec.num_classes));
        break;
    }
    case TaskKind::kSeqRegression: {
        const auto *v = std::get_if<double>(&r.label);
        if (!v || !std::isfinite(*v)) throw DataError(where + ": expected a finite scalar label");
        break;
    }
    }
}

std::vector<Record> parse_task_table(const std::string &text, const TaskSpec &spec) {
    const auto lines = split_lines(text);
    if (lines.empty() || trim(lines[0]).empty()) throw DataError("task table is empty");
    const char delim = lines[0].find('\t') != std::string::npos ? '\t' : ',';
    const auto header = split(lines[0], delim);
    std::size_t col_id = header.size(), col_seq = header.size(), col_label = header.size();
    for (std::size_t i = 0; i < header.size(); ++i) {
        const auto h = trim(header[i]);
        if (h == "id") col_id = i;
        if (h == "sequence") col_seq = i;
        if (h == "label") col_label = i;
    }
    if (col_id == header.size() || col_seq == header.size() || col_label == header.size())
        throw DataError("task table header must name columns id, sequence, label");

    std::vector<Record> records;
    for (std::size_t row = 1; row < lines.size(); ++row) {
        if (trim(lines[row]).empty()) continue;
        const std::string where = "line " + std::to_string(row + 1);
        const auto cols = split(lines[row], delim);
        if (cols.size() != header.size())
            throw DataError(where + ": expected " + std::to_string(header.size()) + " columns, got " + std::to_string(cols.size()));
        Record r;
        r.id = trim(cols[col_id]);
        r.sequence = trim(cols[col_seq]);
        const std::string raw = trim(cols[col_label]);
        switch (spec.kind) {
        case TaskKind::kSeqMultilabel: {
            std::vector<double> bits(spec.num_classes, 0.0);
            if (!raw.empty())
                for (const auto &tok : split(raw, ';')) {
                    const std::size_t c = parse_index(trim(tok), where);
                    if (c >= spec.num_classes)
                        throw DataError(where + ": class index " + std::to_string(c) + " >= " + std::to_string(spec.num_classes));
                    bits[c] = 1.0;
                }
            r.label = std::move(bits);
            break;
        }
        case TaskKind::kSeqMulticlass: r.label = parse_index(raw, where); break;
        case TaskKind::kTokenMulticlass: {
            std::vector<std::size_t> classes;
            for (char c : raw) {
                if (c < '0' || c > '9') throw DataError(where + ": token label '" + std::string(1, c) + "' is not a digit");
                classes.push_back(static_cast<std::size_t>(c - '0'));
            }
            r.label = std::move(classes);
            break;
        }
        case TaskKind::kSeqRegression: {
            std::size_t pos = 0;
            double v = 0.0;
            try {
                v = std::stod(raw, &pos);
            } catch (const std::exception &) {
                throw DataError(where + ": '" + raw + "' is not a number");
            }
            if (pos != raw.size()) throw DataError(where + ": '" + raw + "' is not a number");
            r.label = v;
            break;
        }
        }
        validate_record(r, spec, where);
        records.push_back(std::move(r));
    }
    if (records.empty()) throw DataError("task table has no rows");
    return records;
}

std::vector<Record> load_task_table(const std::filesystem::path &path, const TaskSpec &spec) {
    try {
        return parse_task_table(read_file(path), spec);
    } catch (const DataError &e) {
        throw DataError(path.string() + ": " + std::string(e.what()).substr(std::string("data error: ").size()));
    }
}

std::string format_label(const Label &label, const TaskSpec &spec) {
    std::ostringstream out;
    out.precision(17);
    switch (spec.kind) {
    case TaskKind::kSeqMultilabel: {
        const auto &bits = std::get<std::vector<double>>(label);
        bool first = true;
        for (std::size_t c = 0; c < bits.size(); ++c)
            if (bits[c] > 0.5) {
                out << (first ? "" : ";") << c;
                first = false;
            }
        break;
    }
    case TaskKind::kSeqMulticlass: out << std::get<std::size_t>(label); break;
    case TaskKind::kTokenMulticlass:
        for (auto c : std::get<std::vector<std::size_t>>(label)) out << c;
        break;
    case TaskKind::kSeqRegression: out << std::get<double>(label); break;
    }
    return out.str();
}

void write_task_table(const std::filesystem::path &path, const std::vector<Record> &records, const TaskSpec &spec) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << "id,sequence,label\n";
    for (const auto &r : records) out << r.id << ',' << r.sequence << ',' << format_label(r.label, spec) << '\n';
}

std::vector<TokenBatch> make_batches(const std::vector<Record> &records, std::size_t batch_size, Rng &rng, bool shuffle) {
    if (records.empty()) throw DataError("no records to batch");
    if (batch_size < 1) throw ConfigError("batch size must be >= 1");
    std::vector<std::size_t> order(records.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (shuffle) rng.shuffle(order);
    std::vector<TokenBatch> batches;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
        const std::size_t end = std::min(order.size(), start + batch_size);
        std::vector<TokenizedSequence> seqs;
        std::vector<std::string> ids;
        std::vector<Label> labels;
        for (std::size_t i = start; i < end; ++i) {
            const Record &r = records[order[i]];
            seqs.push_back(encode(r.sequence));
            ids.push_back(r.id);
            labels.push_back(r.label);
        }
        batches.push_back(collate(seqs, std::move(ids), std::move(labels)));
    }
    return batches;
}

std::pair<std::vector<Record>, Standardizer> standardize_targets(const std::vector<Record> &records) {
    if (records.size() < 2) throw DataError("standardization needs at least two records");
    std::vector<double> v;
    for (const auto &r : records) {
        const auto *x = std::get_if<double>(&r.label);
        if (!x) throw DataError("standardization applies to regression labels only");
        v.push_back(*x);
    }
    Standardizer s;
    s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
    if (!(s.std > 0.0)) throw NumericError("degenerate regression targets: zero standard deviation");
    return {apply_standardizer(records, s), s};
}

std::vector<Record> apply_standardizer(const std::vector<Record> &records, const Standardizer &s) {
    std::vector<Record> out = records;
    for (auto &r : out) r.label = s.apply(std::get<double>(r.label));
    return out;
}

double composition_weight(char residue) {
    switch (residue) {
    case 'A': case 'I': case 'L': case 'M': case 'F': case 'V': case 'W': return 1.0;
    case 'D': case 'E': case 'K': case 'R': return -1.0;
    case 'G': case 'P': return 0.5;
    default: return 0.0;
    }
}

double composition_target(const std::string &sequence) {
    double total = 0.0;
    for (char c : sequence) total += composition_weight(c);
    return total / static_cast<double>(sequence.size());
}

std::string synthetic_motif(std::size_t c) {
    // Motifs use residues that background sequences never contain.
    static constexpr std::string_view kMotifAlphabet = "CWHMY";
    std::string m;
    std::size_t x = c + 5;  // skip the three-letter repeats of the first letters
    for (int i = 0; i < 3; ++i) {
        m.push_back(kMotifAlphabet[x % kMotifAlphabet.size()]);
        x /= kMotifAlphabet.size();
    }
    return m;
}

std::size_t residue_group(char residue) {
    switch (residue) {
    case 'A': case 'I': case 'L': case 'M': case 'F': case 'V': case 'W': return 0;
    case 'D': case 'E': case 'K': case 'R': case 'H': return 2;
    default: return 1;
    }
}

namespace {

// Background residues for classification tasks exclude the motif alphabet.
constexpr std::string_view kBackground = "ADEFGIKLNPQRSTV";

std::string random_sequence(std::size_t len, std::string_view alphabet, Rng &rng) {
    std::string s(len, 'A');
    for (char &c : s) c = alphabet[rng.below(alphabet.size())];
    return s;
}

std::string biased_sequence(std::size_t len, Rng &rng) {
    // Per-sequence preference for one residue group spreads the targets.
    static constexpr std::string_view kHydrophobic = "AILMFVW";
    static constexpr std::string_view kCharged = "DEKR";
    const double p_h = rng.uniform() * 0.6;
    const double p_c = rng.uniform() * 0.6 * (1.0 - p_h);
    std::string s(len, 'A');
    for (char &c : s) {
        const double u = rng.uniform();
        if (u < p_h)
            c = kHydrophobic[rng.below(kHydrophobic.size())];
        else if (u < p_h + p_c)
            c = kCharged[rng.below(kCharged.size())];
        else
            c = Vocabulary::kResidues[rng.below(Vocabulary::kResidues.size())];
    }
    return s;
}

void plant(std::string &s, const std::string &motif, Rng &rng) {
    const std::size_t pos = rng.below(s.size() - motif.size() + 1);
    s.replace(pos, motif.size(), motif);
}

} // namespace

std::pair<std::vector<Record>, std::vector<Record>> synth_task(TaskKind kind, std::size_t n, std::size_t max_len,
                                                               std::uint64_t seed, const SynthOptions &opts) {
    if (n < 2) throw ConfigError("synthetic task needs at least 2 records");
    if (max_len < 8) throw ConfigError("synthetic sequences need max_len >= 8");
    Rng rng(seed);
    const std::size_t min_len = std::max<std::size_t>(8, max_len - max_len / 4);
    const std::size_t classes = kind == TaskKind::kTokenMulticlass ? 3 : opts.num_classes;
    std::vector<Record> all;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t len = min_len + rng.below(max_len - min_len + 1);
        Record r;
        r.id = task_kind_name(kind) + "_" + std::to_string(i);
        switch (kind) {
        case TaskKind::kSeqRegression:
            r.sequence = biased_sequence(len, rng);
            r.label = composition_target(r.sequence);
            break;
        case TaskKind::kSeqMulticlass: {
            const std::size_t c = rng.below(classes);
            r.sequence = random_sequence(len, kBackground, rng);
            plant(r.sequence, synthetic_motif(c), rng);
            r.label = c;
            break;
        }
        case TaskKind::kSeqMultilabel: {
            std::vector<double> bits(classes, 0.0);
            bits[rng.below(classes)] = 1.0;
            for (auto &b : bits)
                if (rng.uniform() < 0.3) b = 1.0;
            r.sequence = random_sequence(len, kBackground, rng);
            // Plant in disjoint slots so motifs never overlap.
            std::vector<std::size_t> slots(len / 3);
            std::iota(slots.begin(), slots.end(), std::size_t{0});
            rng.shuffle(slots);
            std::size_t next = 0;
            for (std::size_t c = 0; c < classes; ++c) {
                if (bits[c] < 0.5) continue;
                if (next >= slots.size()) {
                    bits[c] = 0.0;
                    continue;
                }
                r.sequence.replace(slots[next++] * 3, 3, synthetic_motif(c));
            }
            r.label = std::move(bits);
            break;
        }
        case TaskKind::kTokenMulticlass: {
            r.sequence = random_sequence(len, Vocabulary::kResidues, rng);
            std::vector<std::size_t> t;
            for (char c : r.sequence) t.push_back(residue_group(c));
            r.label = std::move(t);
            break;
        }
        }
        all.push_back(std::move(r));
    }
    std::size_t n_test = static_cast<std::size_t>(std::llround(opts.test_fraction * static_cast<double>(n)));
    n_test = std::clamp<std::size_t>(n_test, 1, n - 1);
    std::vector<Record> test(all.end() - static_cast<std::ptrdiff_t>(n_test), all.end());
    all.resize(n - n_test);
    return {std::move(all), std::move(test)};
}

std::vector<FastaEntry> synth_corpus(std::size_t n, std::size_t max_len, std::uint64_t seed) {
    if (max_len < 8) throw ConfigError("synthetic sequences need max_len >= 8");
    // First-order chain: each residue strongly prefers one successor from a
    // small hub set, which gives masked positions a predictable context and
    // a skewed residue distribution.
    static constexpr std::string_view kHubs = "ALEGK";
    Rng rng(seed);
    const std::size_t min_len = std::max<std::size_t>(8, max_len - max_len / 4);
    std::vector<FastaEntry> out;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t len = min_len + rng.below(max_len - min_len + 1);
        std::string s;
        char prev = Vocabulary::kResidues[rng.below(20)];
        s.push_back(prev);
        while (s.size() < len) {
            const auto idx = Vocabulary::kResidues.find(prev);
            const double u = rng.uniform();
            char next;
            if (u < 0.6)
                next = kHubs[idx % kHubs.size()];
            else if (u < 0.8)
                next = Vocabulary::kResidues[(idx * 7 + 3) % 20];
            else
                next = Vocabulary::kResidues[rng.below(20)];
            s.push_back(next);
            prev = next;
        }
        out.push_back({"seq" + std::to_string(i), std::move(s)});
    }
    return out;
}

} // namespace plm
