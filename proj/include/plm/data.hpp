// Copyright (c) 2026, The plmft Authors
// SPDX-License-Identifier: Apache-2.0
//
// Task definitions, FASTA / task-table ingestion, seeded batching and
// synthetic desk-scale tasks.

#pragma once

#include "plm/batch.hpp"
#include "plm/rng.hpp"

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace plm {

enum class TaskKind { kSeqMultilabel, kSeqMulticlass, kTokenMulticlass, kSeqRegression };
enum class LossKind { kMlBce, kCrossEntropy, kMse };
enum class MetricKind { kF1Max, kAccuracy, kSpearman, kR2 };

std::string task_kind_name(TaskKind k);
TaskKind parse_task_kind(const std::string &s);
std::string loss_name(LossKind k);
std::string metric_name(MetricKind m);
MetricKind parse_metric(const std::string &s);

struct TaskSpec {
    std::string name = "task";
    TaskKind kind = TaskKind::kSeqRegression;
    std::size_t num_classes = 1;
    LossKind loss = LossKind::kMse;
    MetricKind metric = MetricKind::kSpearman;
    bool standardize = true;

    bool token_level() const { return kind == TaskKind::kTokenMulticlass; }
    std::size_t out_dim() const { return kind == TaskKind::kSeqRegression ? 1 : num_classes; }
    void validate() const;
};

// Binds loss and metric to the kind: multilabel -> ml-bce / f1max,
// multiclass (sequence or token) -> ce / accuracy, regression -> mse /
// spearman (or r2 when requested).
TaskSpec make_task(const std::string &name, TaskKind kind, std::size_t num_classes,
                   MetricKind regression_metric = MetricKind::kSpearman);

struct Record {
    std::string id;
    std::string sequence;
    Label label;
};

struct FastaEntry {
    std::string id;
    std::string sequence;
};

std::vector<FastaEntry> load_fasta(const std::filesystem::path &path);
std::vector<FastaEntry> parse_fasta(const std::string &text);
void write_fasta(const std::filesystem::path &path, const std::vector<FastaEntry> &entries, std::size_t wrap = 60);

// Columns id, sequence, label; comma or tab delimited (sniffed from the
// header). Multi-label: ';'-joined class indices. Token-level: one class
// digit per residue.
std::vector<Record> load_task_table(const std::filesystem::path &path, const TaskSpec &spec);
std::vector<Record> parse_task_table(const std::string &text, const TaskSpec &spec);
void write_task_table(const std::filesystem::path &path, const std::vector<Record> &records, const TaskSpec &spec);
std::string format_label(const Label &label, const TaskSpec &spec);

void validate_record(const Record &r, const TaskSpec &spec, const std::string &where);

// Seeded shuffle (optional), contiguous chunks, per-batch padding.
std::vector<TokenBatch> make_batches(const std::vector<Record> &records, std::size_t batch_size, Rng &rng, bool shuffle);

struct Standardizer {
    double mean = 0.0;
    double std = 1.0;  // sample (n - 1) standard deviation
    double apply(double v) const { return (v - mean) / std; }
    double inverse(double v) const { return v * std + mean; }
};

// Regression targets -> zero mean, unit sample std.
std::pair<std::vector<Record>, Standardizer> standardize_targets(const std::vector<Record> &records);
std::vector<Record> apply_standardizer(const std::vector<Record> &records, const Standardizer &s);

// Per-residue weights of the synthetic composition-regression target.
double composition_weight(char residue);
// Mean composition weight over the sequence.
double composition_target(const std::string &sequence);
// Planted motif for class c of the synthetic classification tasks.
std::string synthetic_motif(std::size_t c);
// Class of a residue for the synthetic token task (0 hydrophobic,
// 1 polar/other, 2 charged).
std::size_t residue_group(char residue);

struct SynthOptions {
    std::size_t num_classes = 4;   // ignored for regression; 3 for token tasks
    double test_fraction = 0.2;
};

// Deterministic synthetic train/test split with disjoint ids.
std::pair<std::vector<Record>, std::vector<Record>> synth_task(TaskKind kind, std::size_t n, std::size_t max_len,
                                                               std::uint64_t seed, const SynthOptions &opts = {});

// Unlabeled random sequences for pretraining.
std::vector<FastaEntry> synth_corpus(std::size_t n, std::size_t max_len, std::uint64_t seed);

} // namespace plm
