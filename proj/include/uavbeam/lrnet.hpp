#ifndef UAVBEAM_LRNET_HPP
#define UAVBEAM_LRNET_HPP

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "uavbeam/numerics.hpp"
#include "uavbeam/scenario.hpp"

namespace uavbeam {

// One LSTM layer. Gate blocks are stacked along the rows of the weight
// matrices in the fixed order [input; forget; candidate; output], H rows each.
struct LstmLayerParams {
    int input_size = 0;   // D
    int hidden_size = 0;  // H
    Mat w_input;          // 4H x D
    Mat w_hidden;         // 4H x H
    std::vector<double> bias;  // 4H
};

// Input windows are normalized to displacements anchored at the last column
// (u_{k-1}), which becomes exactly (0, 0); labels are u_k - anchor. This makes
// prediction translation-equivariant.
struct NormalizationSpec {
    std::string mode = "anchored-displacement";
};

// Stacked two-layer LSTM + linear head mapping a 2xL window to a 2-vector.
struct LrnetModel {
    LstmLayerParams layer1;       // D=2  -> H1
    LstmLayerParams layer2;       // H1   -> H2
    Mat fc_weight;                // 2 x H2
    std::vector<double> fc_bias;  // 2
    NormalizationSpec norm_spec;
    int window_l = 20;
    std::uint64_t train_seed = 0;
};

struct TrainingExample {
    Mat input;                    // 2 x L, normalized
    std::array<double, 2> label;  // u_k - anchor
    Location anchor;              // u_{k-1}
};

struct TrainConfig {
    int n_examples = 9000;
    int epochs = 100;
    int batch_size = 64;
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    double grad_clip_norm = 5.0;
    double validation_fraction = 0.1;
    std::uint64_t seed = 1;
};

void validate(const TrainConfig& cfg);

/// Parse the optional "train" block of a config JSON document. Missing block
/// or missing keys keep defaults; unknown keys inside the block are rejected.
TrainConfig load_train_config(const std::string& json_text);

struct LayerGrads {
    Mat w_input;
    Mat w_hidden;
    std::vector<double> bias;
};

struct ModelGrads {
    LayerGrads layer1, layer2;
    Mat fc_weight;
    std::vector<double> fc_bias;
};

// Adam moments; shapes mirror the model parameters.
struct OptimizerState {
    ModelGrads first_moment;
    ModelGrads second_moment;
    long step_count = 0;
};

// Everything backward() needs from a forward pass, batched: step t activations
// for both layers. h[0]/c[0] are the zero initial states.
struct LayerCache {
    std::vector<Mat> gates;   // L of (4H x B), post-activation
    std::vector<Mat> c;       // L+1 of (H x B)
    std::vector<Mat> tanh_c;  // L of (H x B)
    std::vector<Mat> h;       // L+1 of (H x B)
};

struct ForwardCache {
    int batch = 0;
    std::vector<Mat> x;  // L of (2 x B), layer-1 inputs
    LayerCache l1, l2;
    Mat pred;  // 2 x B
};

// --- construction -----------------------------------------------------------

/// Fresh model with weights uniform in +-1/sqrt(fan_in) per tensor and the
/// forget-gate bias block set to +1, drawn from init_seed in a fixed order.
LrnetModel make_model(int window_l, int h1, int h2, std::uint64_t init_seed);

ModelGrads make_grads(const LrnetModel& model);
OptimizerState make_optimizer_state(const LrnetModel& model);

// --- core ops ----------------------------------------------------------------

/// Single LSTM cell step. Returns (h, c); fills *cache when given.
/// Throws std::invalid_argument on shape mismatch.
struct CellCache {
    Mat x, h_prev, c_prev;       // 1-column
    Mat gates, c, tanh_c;        // 1-column
};
std::pair<std::vector<double>, std::vector<double>> lstm_cell_forward(
    const std::vector<double>& x, const std::vector<double>& h_prev,
    const std::vector<double>& c_prev, const LstmLayerParams& p,
    CellCache* cache = nullptr);

/// Anchored-displacement normalization: column i becomes u_i - u_{k-1}.
std::pair<Mat, Location> normalize(const TrajectoryWindow& w, const NormalizationSpec& spec);

/// Forward pass over one window; prediction is in normalized (displacement)
/// coordinates. The cache supports an exact backward pass.
std::pair<std::array<double, 2>, ForwardCache> forward(const LrnetModel& model,
                                                       const TrajectoryWindow& w);

/// Batched forward over normalized 2xL inputs.
void forward_batch(const LrnetModel& model, const std::vector<const TrainingExample*>& batch,
                   ForwardCache& cache);

/// J = (1/2n) sum_n ||label_n - pred_n||^2. Throws std::domain_error on an
/// empty batch or length mismatch.
double mse_loss(const std::vector<std::array<double, 2>>& preds,
                const std::vector<std::array<double, 2>>& labels);

/// Exact BPTT gradient of the batch MSE w.r.t. every parameter tensor.
/// labels is 2 x B, matching the cache's batch. Throws std::invalid_argument
/// on a cache that does not match the model or labels.
ModelGrads backward(const LrnetModel& model, const ForwardCache& cache, const Mat& labels);

/// Central-difference check of backward() on one example; returns the maximum
/// relative error over the checked parameters. max_per_tensor == 0 checks
/// every parameter; otherwise a seeded subsample of that size per tensor.
double grad_check(const LrnetModel& model, const TrainingExample& ex, double epsilon,
                  int max_per_tensor = 0);

/// One Adam update; gradients are globally norm-clipped to cfg.grad_clip_norm
/// first. Increments state.step_count.
void adam_step(LrnetModel& model, const ModelGrads& grads, OptimizerState& state,
               const TrainConfig& cfg);

// --- data & training ---------------------------------------------------------

/// Sliding windows from n_trajectories fresh trajectories (per-trajectory seed
/// = derive_seed(seed, index)); every k in [L, k_slots) yields one example.
std::vector<TrainingExample> build_dataset(const ScenarioConfig& cfg, int n_trajectories,
                                           std::uint64_t seed);

struct EpochStats {
    double train_loss = 0.0;
    double val_loss = 0.0;
};

struct TrainResult {
    std::vector<EpochStats> history;
    double initial_train_loss = 0.0;  // training-split loss before any update
    int best_epoch = -1;
    double best_val_loss = 0.0;
};

/// Mini-batch Adam with a seeded shuffle and best-validation checkpointing;
/// the model is left at the best-validation parameters. Throws NumericalError
/// (with the epoch index) if the loss goes non-finite.
TrainResult train(LrnetModel& model, const std::vector<TrainingExample>& dataset,
                  const TrainConfig& cfg);

// --- prediction --------------------------------------------------------------

/// Denormalized prediction: anchor + forward(model, window).
Location predict_location(const LrnetModel& model, const TrajectoryWindow& w);

/// relative_angle(predict_location(...), ue).
double predict_angle(const LrnetModel& model, const TrajectoryWindow& w, const Location& ue);

/// Iterated prediction feeding each output back as the newest column;
/// element j is the prediction for slot target_index + j.
std::vector<Location> predict_multi_step(const LrnetModel& model, const TrajectoryWindow& w,
                                         int steps);

// --- persistence ---------------------------------------------------------------

/// JSON round-trip, bit-exact on parameters. load throws ConfigError on parse
/// or schema problems and never returns a partial model.
void save_model(const LrnetModel& model, const std::string& path);
LrnetModel load_model(const std::string& path);

}  // namespace uavbeam

#endif
