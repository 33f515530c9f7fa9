#include "drowsy/classify.hpp"

#include "drowsy/error.hpp"
#include "drowsy/pgm.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <fstream>
#include <random>
#include <stdexcept>

namespace drowsy {

const char* to_string(State s)
{
    switch (s)
    {
    case State::open: return "open";
    case State::closed: return "closed";
    case State::unknown: return "unknown";
    }
    return "unknown";
}

std::optional<State> parse_state(std::string_view s)
{
    if (s == "open")
        return State::open;
    if (s == "closed")
        return State::closed;
    if (s == "unknown")
        return State::unknown;
    return std::nullopt;
}

const char* to_string(RoiKind k) { return k == RoiKind::eye ? "eye" : "mouth"; }

std::optional<RoiKind> parse_roi_kind(std::string_view s)
{
    if (s == "eye")
        return RoiKind::eye;
    if (s == "mouth")
        return RoiKind::mouth;
    return std::nullopt;
}

void RoiImage::validate() const
{
    if (width < 1 || height < 1)
        throw std::invalid_argument("ROI image sides must be at least 1 px");
    if (pixels.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
        throw std::invalid_argument(fmt::format("ROI image has {} pixels, expected {}x{}", pixels.size(), width, height));
}

double contrast_energy(const RoiImage& img)
{
    img.validate();
    const auto w = static_cast<std::size_t>(img.width);
    const auto h = static_cast<std::size_t>(img.height);

    // Integer form of var(row means) / var(pixels): sum_r (h s_r - S)^2 / (h (N Q - S^2)).
    // Exact, so adding a constant to every pixel leaves the ratio bit-identical.
    __extension__ typedef __int128 wide;
    wide total = 0;
    wide squares = 0;
    std::vector<wide> row_sums(h, 0);
    for (std::size_t r = 0; r < h; ++r)
    {
        for (std::size_t c = 0; c < w; ++c)
        {
            const wide p = img.pixels[r * w + c];
            row_sums[r] += p;
            squares += p * p;
        }
        total += row_sums[r];
    }
    const wide n = static_cast<wide>(w * h);
    const wide spread = n * squares - total * total;
    if (spread <= 0)
        return 0.0;
    wide rows = 0;
    for (const wide s : row_sums)
    {
        const wide d = static_cast<wide>(h) * s - total;
        rows += d * d;
    }
    return static_cast<double>(static_cast<long double>(rows) /
                               (static_cast<long double>(h) * static_cast<long double>(spread)));
}

StateVerdict baseline_classify(const RoiImage& img, const BaselineThresholds& thresholds)
{
    const double tau = img.kind == RoiKind::eye ? thresholds.eye : thresholds.mouth;
    const double energy = contrast_energy(img);
    StateVerdict v;
    v.state = energy >= tau ? State::open : State::closed;
    v.confidence = std::clamp(std::abs(energy - tau) / tau, 0.0, 1.0);
    return v;
}

StateVerdict classify_roi(const RoiImage& img, Classifier& backend)
{
    img.validate();
    try
    {
        return backend.classify(img);
    }
    catch (const BackendUnavailable& e)
    {
        spdlog::error("classifier '{}' unavailable: {}", backend.name(), e.what());
        return StateVerdict::unknown();
    }
}

Metrics compute_metrics(const ConfusionMatrix& cm)
{
    if (cm.total() == 0)
        throw EmptyMatrix("confusion matrix has no samples");
    Metrics m;
    m.accuracy = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
    if (cm.tp + cm.fp > 0)
        m.precision = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fp);
    if (cm.tp + cm.fn > 0)
        m.recall = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn);
    return m;
}

std::size_t test_split_size(std::size_t n) { return (n + 5) / 10; }

std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed)
{
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i)
        idx[i] = i;
    std::mt19937_64 rng(seed);
    for (std::size_t i = n; i > 1; --i)
    {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(idx[i - 1], idx[j]);
    }
    return idx;
}

EvaluationReport evaluate_dataset(std::span<const LabeledRoi> items, Classifier& backend, std::uint64_t split_seed)
{
    if (items.size() < 10)
        throw InsufficientData(fmt::format("need at least 10 labelled items, got {}", items.size()));
    const bool has_open = std::any_of(items.begin(), items.end(), [](const auto& i) { return i.label == State::open; });
    const bool has_closed =
        std::any_of(items.begin(), items.end(), [](const auto& i) { return i.label == State::closed; });
    if (!has_open || !has_closed)
        throw InsufficientData("manifest must contain both open and closed labels");
    for (const auto& item : items)
        if (item.label == State::unknown)
            throw InsufficientData("manifest labels must be open or closed");

    const std::vector<std::size_t> order = seeded_permutation(items.size(), split_seed);
    const std::size_t n_test = test_split_size(items.size());
    const std::size_t n_train = items.size() - n_test;

    EvaluationReport report;
    report.train_indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    report.test_indices.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());

    std::vector<LabeledRoi> train;
    train.reserve(n_train);
    for (auto i : report.train_indices)
        train.push_back(items[i]);
    backend.fit(train);

    for (auto i : report.test_indices)
    {
        const StateVerdict v = classify_roi(items[i].image, backend);
        const bool truth_open = items[i].label == State::open;
        if (v.state == State::unknown)
        {
            ++report.unknown_predictions;
            (truth_open ? report.confusion.fn : report.confusion.fp) += 1;
            continue;
        }
        const bool pred_open = v.state == State::open;
        if (pred_open && truth_open)
            ++report.confusion.tp;
        else if (pred_open)
            ++report.confusion.fp;
        else if (truth_open)
            ++report.confusion.fn;
        else
            ++report.confusion.tn;
    }
    report.metrics = compute_metrics(report.confusion);
    return report;
}

std::vector<LabeledRoi> load_manifest(const std::filesystem::path& manifest)
{
    std::ifstream in(manifest);
    if (!in)
        throw ParseError(0, "cannot open manifest " + manifest.string());

    const auto base = manifest.parent_path();
    std::vector<LabeledRoi> items;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line))
    {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        try
        {
            const auto j = nlohmann::json::parse(line);
            const auto kind = parse_roi_kind(j.at("kind").get<std::string>());
            const auto label = parse_state(j.at("label").get<std::string>());
            if (!kind)
                throw ParseError(line_no, "kind must be eye or mouth");
            if (!label || *label == State::unknown)
                throw ParseError(line_no, "label must be open or closed");
            std::filesystem::path path = j.at("path").get<std::string>();
            if (path.is_relative())
                path = base / path;
            items.push_back({read_pgm(path, *kind), *label, path.string()});
        }
        catch (const ParseError&)
        {
            throw;
        }
        catch (const std::exception& e)
        {
            throw ParseError(line_no, e.what());
        }
    }
    return items;
}

std::string format_model_comparison(std::vector<ModelReportRow> rows)
{
    std::stable_sort(rows.begin(), rows.end(), [](const ModelReportRow& a, const ModelReportRow& b) {
        if (a.accuracy != b.accuracy)
            return a.accuracy > b.accuracy;
        return a.loss < b.loss;
    });

    std::size_t name_w = 5;
    for (const auto& r : rows)
        name_w = std::max(name_w, r.model_name.size());
    name_w += 2;

    std::string out = fmt::format("{:<{}}{:<10}{}\n", "Model", name_w, "Accuracy", "Loss");
    for (const auto& r : rows)
        out += fmt::format("{:<{}}{:<10.3f}{:.3f}\n", r.model_name, name_w, r.accuracy, r.loss);
    return out;
}

} // namespace drowsy
