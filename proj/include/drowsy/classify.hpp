#pragma once

#include "drowsy/face.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace drowsy {

enum class State { open, closed, unknown };

const char* to_string(State s);
/// Accepts "open", "closed" and "unknown"; nullopt otherwise.
std::optional<State> parse_state(std::string_view s);

const char* to_string(RoiKind k);
std::optional<RoiKind> parse_roi_kind(std::string_view s);

/// 8-bit grayscale crop, row-major.
struct RoiImage
{
    RoiKind kind = RoiKind::eye;
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;

    /// Throws std::invalid_argument when pixels.size() != width * height or a side is < 1.
    void validate() const;
};

struct StateVerdict
{
    State state = State::unknown;
    double confidence = 0.0;

    static StateVerdict unknown() { return {}; }
    friend bool operator==(const StateVerdict&, const StateVerdict&) = default;
};

struct LabeledRoi
{
    RoiImage image;
    State label = State::unknown;
    std::string source;
};

/// Open/closed decision boundary. Implementations may throw BackendUnavailable or ProtocolError.
class Classifier
{
public:
    virtual ~Classifier() = default;

    virtual StateVerdict classify(const RoiImage& img) = 0;

    /// Optional training hook; evaluate_dataset passes only the training split.
    virtual void fit(std::span<const LabeledRoi> /*train*/) {}

    virtual std::string name() const = 0;
};

struct BaselineThresholds
{
    double eye = 0.15;
    double mouth = 0.10;
};

/// var(row means) / var(all pixels); 0 for a constant image.
double contrast_energy(const RoiImage& img);

/// Open iff the vertical contrast energy reaches the per-kind threshold.
StateVerdict baseline_classify(const RoiImage& img, const BaselineThresholds& thresholds = {});

class BaselineClassifier final : public Classifier
{
public:
    explicit BaselineClassifier(BaselineThresholds thresholds = {}) : thresholds_(thresholds) {}

    StateVerdict classify(const RoiImage& img) override { return baseline_classify(img, thresholds_); }
    std::string name() const override { return "baseline"; }

private:
    BaselineThresholds thresholds_;
};

/// Runs the backend; a BackendUnavailable failure is logged and becomes an unknown verdict.
/// ProtocolError propagates.
StateVerdict classify_roi(const RoiImage& img, Classifier& backend);

/// Counts with "open" as the positive class.
struct ConfusionMatrix
{
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t tn = 0;
    std::uint64_t fn = 0;

    std::uint64_t total() const { return tp + fp + tn + fn; }
    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

struct Metrics
{
    double accuracy = 0.0;
    std::optional<double> precision; ///< empty when tp + fp == 0
    std::optional<double> recall;    ///< empty when tp + fn == 0
};

/// Throws EmptyMatrix when every count is zero.
Metrics compute_metrics(const ConfusionMatrix& cm);

struct EvaluationReport
{
    ConfusionMatrix confusion;
    Metrics metrics;
    std::vector<std::size_t> train_indices;
    std::vector<std::size_t> test_indices;
    std::size_t unknown_predictions = 0;
};

/// Size of the held-out split for n items: round(0.10 n).
std::size_t test_split_size(std::size_t n);

/// Seeded Fisher-Yates shuffle of 0..n-1 (portable: no std distributions).
std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed);

/// Shuffles by seed, holds out the last 10%, fits on the rest and scores the held-out part.
/// Unknown predictions count as errors. Throws InsufficientData for < 10 items or a missing label.
EvaluationReport evaluate_dataset(std::span<const LabeledRoi> items, Classifier& backend, std::uint64_t split_seed);

/// Reads a JSONL manifest of {"path","kind","label"} entries; paths are relative to the manifest.
/// Throws ParseError (with line number) on malformed lines or unreadable images.
std::vector<LabeledRoi> load_manifest(const std::filesystem::path& manifest);

struct ModelReportRow
{
    std::string model_name;
    double accuracy = 0.0;
    double loss = 0.0;
};

/// Fixed-width table sorted by accuracy (descending), ties by loss (ascending).
std::string format_model_comparison(std::vector<ModelReportRow> rows);

} // namespace drowsy
