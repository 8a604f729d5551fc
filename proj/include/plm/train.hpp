// Copyright (c) 2026, The plmft Authors
// SPDX-License-Identifier: Apache-2.0
//
// Run configuration, the assembled fine-tuning model, the optimizer and
// the pretrain / finetune / evaluate / sweep / predict drivers.

#pragma once

#include "plm/checkpoint.hpp"
#include "plm/config.hpp"
#include "plm/contact.hpp"
#include "plm/data.hpp"
#include "plm/encoder.hpp"
#include "plm/heads.hpp"
#include "plm/lora.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace plm {

// Learning-rate candidates probed by the lr search.
inline const std::vector<double> kLearningRateGrid{5e-6, 1e-6, 5e-5, 1e-5, 5e-4, 1e-4};
inline constexpr std::size_t kDefaultAccumulation = 16;
inline constexpr std::size_t kLrProbeEpochs = 3;
inline constexpr const char *kSeedEnvVar = "PLMFT_SEED";

struct PretrainConfig {
    std::size_t steps = 500;
    std::size_t batch_size = 16;
    double lr = 3e-3;
    double mask_rate = kDefaultMaskRate;
    std::size_t corpus_size = 512;  // synthetic corpus when no FASTA is given
    std::size_t corpus_max_len = 48;
    std::size_t log_every = 50;
};

struct RunConfig {
    std::uint64_t seed = 0;
    EncoderConfig encoder;
    HeadConfig head;
    std::optional<LoraConfig> lora = LoraConfig{};
    TaskSpec task;
    double lr = 5e-4;
    std::size_t epochs = 10;
    std::size_t batch_size = 4;
    std::size_t accumulation = kDefaultAccumulation;
    bool shuffle = true;
    bool train_metric = true;  // also score the training split each epoch
    bool lr_unrestricted = false;
    PretrainConfig pretrain;

    // Defaults, then `cfg` entries, then the seed environment variable
    // when `cfg` has no seed.
    static RunConfig from_map(const ConfigMap &cfg);
    ConfigMap to_map() const;
    void validate() const;
};

// Assembled model: encoder (+ adapters), contact head, downstream head.
struct Model {
    Encoder encoder;
    ContactHeadParams contact;
    Head head;
    TaskSpec task;
    std::optional<LoraConfig> lora;
    std::optional<Standardizer> standardizer;

    struct Output {
        Tensor logits;    // (B, out) or (B, L', out)
        Tensor contacts;  // (B, L', L') when collected
        Tensor residue_mask;
        bool has_contacts = false;
    };

    Output forward(const TokenBatch &batch, bool training = false, Rng *rng = nullptr, bool want_contacts = false) const;

    ParamList adapter_parameters() const;
    // What finetuning trains and what a finetune checkpoint stores.
    ParamList finetune_parameters() const;
    ParamList trainable_parameters() const;
    ParamReport param_report() const;
};

// Independent copy of an encoder (values and trainable flags).
Encoder copy_encoder(const Encoder &src);

// Copies `base`, injects adapters per cfg (or freezes the encoder when
// cfg.lora is empty) and draws fresh contact/downstream heads.
Model build_model(const Encoder &base, const RunConfig &cfg);

Tensor task_loss(const Model &model, const TokenBatch &batch, bool training = false, Rng *rng = nullptr);

class Adam {
  public:
    Adam(ParamList params, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
    void step();
    void zero_grad();
    std::size_t steps() const { return steps_; }

  private:
    ParamList params_;
    std::vector<std::vector<double>> m_, v_;
    double lr_, beta1_, beta2_, eps_;
    std::size_t steps_ = 0;
};

struct Prediction {
    std::string id;
    Label value;                // probabilities, class, token classes or scalar
    std::vector<double> scores; // class probabilities (multi-class), empty otherwise
};

std::vector<Prediction> predict_records(const Model &model, const std::vector<Record> &records, std::size_t batch_size = 8);
double score_predictions(const TaskSpec &task, const std::vector<Prediction> &preds, const std::vector<Record> &records);

struct RunReport {
    std::string command;
    std::uint64_t seed = 0;
    std::string metric;
    ConfigMap config;
    std::vector<double> train_loss;    // per epoch (per logged step for pretraining)
    std::vector<double> test_metric;   // per epoch
    std::vector<double> train_metric;  // per epoch
    double final_metric = 0.0;
    std::size_t trainable_params = 0;
    std::size_t frozen_params = 0;
    std::size_t optimizer_steps = 0;
    std::size_t unknown_residues = 0;
    std::uint64_t base_hash_before = 0;
    std::uint64_t base_hash_after = 0;
    std::map<std::string, double> extras;
    double wall_clock_s = 0.0;
    std::string status = "ok";

    std::string to_text() const;
    static std::vector<RunReport> parse_all(const std::string &text);
    // Every numeric field except wall-clock time.
    std::map<std::string, std::string> numeric_fields() const;
};

struct PretrainResult {
    Encoder encoder;
    RunReport report;
};

// Masked-token pretraining from a fresh encoder.
PretrainResult pretrain_mlm(const RunConfig &cfg, const std::vector<FastaEntry> &corpus);

struct FinetuneResult {
    Model model;
    RunReport report;
};

FinetuneResult finetune(const RunConfig &cfg, const Encoder &base, const std::vector<Record> &train,
                        const std::vector<Record> &test);

RunReport evaluate(const Model &model, const std::vector<Record> &test);

struct SweepCell {
    std::size_t rank = 0;
    TargetSet targets;
    double lr = 0.0;
    RunReport report;
};

struct SweepOptions {
    std::vector<std::size_t> ranks = kDefaultSweepRanks;
    std::vector<TargetSet> targets = ablation_target_sets();
    bool lr_search = false;
};

std::vector<SweepCell> sweep(const RunConfig &cfg, const Encoder &base, const std::vector<Record> &train,
                             const std::vector<Record> &test, const SweepOptions &opts);

// Long form: one row per cell.
std::string sweep_table_tsv(const std::vector<SweepCell> &cells);
// Target sets as rows, ranks as columns, final metric in each cell.
std::string sweep_table_grid(const std::vector<SweepCell> &cells);

struct LrSearchResult {
    double best_lr = 0.0;
    std::vector<std::pair<double, double>> probes;  // (lr, metric after probe epochs)
};

LrSearchResult lr_search(const RunConfig &cfg, const Encoder &base, const std::vector<Record> &train,
                         const std::vector<Record> &test);

// Checkpoint helpers.
Checkpoint base_checkpoint(const Encoder &encoder);
Encoder encoder_from_checkpoint(const Checkpoint &ckpt);
Checkpoint finetune_checkpoint(const Model &model, const RunConfig &cfg, std::uint64_t base_hash);
Model model_from_checkpoints(const Checkpoint &base, const Checkpoint &finetuned);

// Contact maps written as text: a header line "# <id> L=<n>" followed by n
// rows of n tab-separated probabilities.
void write_contact_maps(const std::filesystem::path &path, const std::vector<std::string> &ids,
                        const std::vector<ContactMap> &maps);

std::vector<ContactMap> predict_contacts(const Model &model, const std::vector<Record> &records, std::size_t batch_size = 8);

} // namespace plm
