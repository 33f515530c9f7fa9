#include "drowsy/classify.hpp"
#include "drowsy/config.hpp"
#include "drowsy/detections.hpp"
#include "drowsy/error.hpp"
#include "drowsy/events.hpp"
#include "drowsy/external_classifier.hpp"
#include "drowsy/pipeline.hpp"
#include "drowsy/pose.hpp"
#include "drowsy/recorder.hpp"
#include "drowsy/synth.hpp"
#include "drowsy/text.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

using namespace drowsy;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitParse = 2;

struct Options
{
    std::string config;
    std::string in;
    std::string out = "-";
    std::string truth;
    std::string format;
    std::string classifier;
    std::string backend_cmd;
    bool no_hold = false;
    std::optional<std::uint64_t> seed;
    std::int64_t window_ms = 60000;
    std::int64_t stride_ms = 0;
    std::vector<double> points;
    int width = 640;
    int height = 480;
};

class Input
{
public:
    explicit Input(const std::string& path)
    {
        if (path.empty() || path == "-")
            return;
        file_.open(path, std::ios::binary);
        if (!file_)
            throw ConfigError("cannot open input " + path);
    }
    std::istream& stream() { return file_.is_open() ? static_cast<std::istream&>(file_) : std::cin; }

private:
    std::ifstream file_;
};

class Output
{
public:
    explicit Output(const std::string& path)
    {
        if (path.empty() || path == "-")
            return;
        file_.open(path, std::ios::binary | std::ios::trunc);
        if (!file_)
            throw ConfigError("cannot open output " + path);
    }
    std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

private:
    std::ofstream file_;
};

PipelineConfig build_config(const Options& o)
{
    PipelineConfig cfg = o.config.empty() ? PipelineConfig{} : load_config(o.config);
    if (!o.format.empty())
    {
        auto f = parse_format(o.format);
        if (!f)
            throw ConfigError("--format must be csv or jsonl");
        cfg.format = *f;
    }
    if (!o.classifier.empty())
    {
        if (o.classifier == "baseline")
            cfg.classifier.backend = ClassifierBackend::baseline;
        else if (o.classifier == "external")
            cfg.classifier.backend = ClassifierBackend::external;
        else
            throw ConfigError("--classifier must be baseline or external");
    }
    if (!o.backend_cmd.empty())
        cfg.classifier.command = o.backend_cmd;
    if (o.no_hold)
        cfg.hold.enabled = false;
    cfg.validate();
    return cfg;
}

// Timeseries inputs: explicit --format wins, then a .jsonl extension, then the config.
TimeseriesFormat input_format(const Options& o, const PipelineConfig& cfg)
{
    if (!o.format.empty())
        return cfg.format;
    if (o.in.size() >= 6 && o.in.ends_with(".jsonl"))
        return TimeseriesFormat::jsonl;
    if (o.in.size() >= 4 && o.in.ends_with(".csv"))
        return TimeseriesFormat::csv;
    return cfg.format;
}

std::vector<FrameRecord> load_records(const Options& o, const PipelineConfig& cfg)
{
    Input in(o.in);
    auto result = read_timeseries(in.stream(), input_format(o, cfg));
    if (result.error)
        throw *result.error;
    if (result.records.empty())
        throw EmptyStream("timeseries has no records");
    return std::move(result.records);
}

std::vector<DrowsinessEvent> analyse(const std::vector<FrameRecord>& records, const EventConfig& ev)
{
    auto eye = segment_episodes(records, Channel::eye, ev.debounce_ms);
    auto mouth = segment_episodes(records, Channel::mouth, ev.debounce_ms);
    return detect_events(eye, mouth, records, ev);
}

int cmd_extract(const Options& o)
{
    const PipelineConfig cfg = build_config(o);
    Pipeline pipeline(cfg);
    Input in(o.in);
    Output out(o.out);
    TimeseriesWriter writer(out.stream(), cfg.format);
    DetectionReader reader(in.stream());
    std::size_t frames = 0;
    while (auto frame = reader.next())
    {
        auto processed = pipeline.process(*frame);
        for (const auto& w : processed.warnings)
            spdlog::warn("{}", w);
        writer.write(processed.record);
        ++frames;
    }
    spdlog::info("extracted {} frames", frames);
    return kExitOk;
}

int cmd_pose(const Options& o)
{
    if (o.points.size() != 12)
        throw ConfigError("--points needs 12 numbers: le, re, nose, ml, mr, chin as x,y pairs");
    PipelineConfig cfg = o.config.empty() ? PipelineConfig{} : load_config(o.config);
    if (o.config.empty())
        cfg.image = {o.width, o.height};
    cfg.validate();
    std::array<Point2, 6> p;
    for (std::size_t i = 0; i < 6; ++i)
        p[i] = {o.points[2 * i], o.points[2 * i + 1]};
    const HeadPose pose = solve_pnp(LandmarkSet6::from_points(p), cfg.face_model, cfg.camera_model(), cfg.solver);
    nlohmann::ordered_json j;
    j["status"] = to_string(pose.status);
    if (!pose.usable())
    {
        std::cout << j.dump() << '\n';
        spdlog::error("pose not recovered: {}", to_string(pose.status));
        return kExitConfig;
    }
    j["yaw"] = pose.yaw_deg;
    j["pitch"] = pose.pitch_deg;
    j["roll"] = pose.roll_deg;
    j["rms"] = pose.reproj_rms_px;
    j["iterations"] = pose.iterations;
    std::cout << j.dump() << '\n';
    return kExitOk;
}

int cmd_events(const Options& o)
{
    const PipelineConfig cfg = build_config(o);
    const auto records = load_records(o, cfg);
    Output out(o.out);
    write_events(analyse(records, cfg.events), out.stream());
    return kExitOk;
}

int cmd_stats(const Options& o)
{
    const PipelineConfig cfg = build_config(o);
    const auto records = load_records(o, cfg);
    const auto events = analyse(records, cfg.events);
    const std::int64_t stride = o.stride_ms > 0 ? o.stride_ms : o.window_ms;
    Output out(o.out);
    write_stats(window_stats(records, events, o.window_ms, stride), out.stream());
    return kExitOk;
}

int cmd_synth(const Options& o)
{
    if (o.in.empty())
        throw ConfigError("synth needs --in <scenario.json>");
    Scenario scn = load_scenario(o.in);
    if (o.seed)
        scn.seed = *o.seed;
    const SynthOutput s = generate(scn);
    {
        Output out(o.out);
        for (const auto& d : s.detections)
            out.stream() << format_detection_line(d) << '\n';
        out.stream().flush();
    }
    if (!o.truth.empty())
    {
        Output truth(o.truth);
        for (const auto& t : s.truth)
            truth.stream() << format_truth_line(t) << '\n';
    }
    spdlog::info("synthesised {} frames", s.detections.size());
    return kExitOk;
}

int cmd_report(const Options& o)
{
    Input in(o.in);
    std::stringstream ss;
    ss << in.stream().rdbuf();
    nlohmann::json j;
    try
    {
        j = nlohmann::json::parse(ss.str());
    }
    catch (const nlohmann::json::parse_error& e)
    {
        throw ParseError(1, e.what());
    }
    if (!j.is_array())
        throw ParseError(1, "expected an array of {model, accuracy, loss}");
    std::vector<ModelReportRow> rows;
    for (std::size_t i = 0; i < j.size(); ++i)
    {
        try
        {
            rows.push_back({j[i].at("model").get<std::string>(), j[i].at("accuracy").get<double>(),
                            j[i].at("loss").get<double>()});
        }
        catch (const nlohmann::json::exception& e)
        {
            throw ParseError(1, fmt::format("row {}: {}", i, e.what()));
        }
    }
    Output out(o.out);
    out.stream() << format_model_comparison(std::move(rows));
    return kExitOk;
}

int cmd_evaluate(const Options& o)
{
    const PipelineConfig cfg = build_config(o);
    const auto items = load_manifest(o.in);
    auto backend = make_classifier(cfg.classifier);
    const auto report = evaluate_dataset(items, *backend, o.seed.value_or(0));
    nlohmann::ordered_json j;
    j["backend"] = backend->name();
    j["test_size"] = report.test_indices.size();
    j["accuracy"] = report.metrics.accuracy;
    j["precision"] = report.metrics.precision ? nlohmann::json(*report.metrics.precision) : nlohmann::json();
    j["recall"] = report.metrics.recall ? nlohmann::json(*report.metrics.recall) : nlohmann::json();
    j["unknown"] = report.unknown_predictions;
    j["confusion"] = {{"tp", report.confusion.tp}, {"fp", report.confusion.fp},
                      {"tn", report.confusion.tn}, {"fn", report.confusion.fn}};
    Output out(o.out);
    out.stream() << j.dump() << '\n';
    return kExitOk;
}

int guarded(int (*fn)(const Options&), const Options& o)
{
    try
    {
        return fn(o);
    }
    catch (const ParseError& e)
    {
        spdlog::error("{}", e.what());
        return kExitParse;
    }
    catch (const EmptyStream& e)
    {
        spdlog::error("{}", e.what());
        return kExitParse;
    }
    catch (const InsufficientData& e)
    {
        spdlog::error("{}", e.what());
        return kExitParse;
    }
    catch (const std::exception& e)
    {
        spdlog::error("{}", e.what());
        return kExitConfig;
    }
}

} // namespace

int main(int argc, char** argv)
{
    auto logger = spdlog::stderr_color_st("drowsy");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("%l: %v");
    spdlog::set_level(spdlog::level::warn);

    CLI::App app{"Drowsiness information extraction from face detections"};
    app.require_subcommand(1);
    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "Log progress");

    Options o;
    int (*selected)(const Options&) = nullptr;

    auto common_config = [&](CLI::App* c) { c->add_option("--config", o.config, "Pipeline config (JSON)"); };
    auto io = [&](CLI::App* c, const char* in_help) {
        c->add_option("--in", o.in, in_help)->required();
        c->add_option("--out", o.out, "Output path, - for stdout");
    };

    auto* extract = app.add_subcommand("extract", "Detections stream to timeseries");
    common_config(extract);
    io(extract, "Detections JSONL, - for stdin");
    extract->add_option("--format", o.format, "csv or jsonl");
    extract->add_option("--classifier", o.classifier, "baseline or external");
    extract->add_option("--backend-cmd", o.backend_cmd, "External classifier command line");
    extract->add_flag("--no-hold", o.no_hold, "Emit unknown instead of holding the last valid record");
    extract->callback([&] { selected = cmd_extract; });

    auto* pose = app.add_subcommand("pose", "Head pose from six landmarks");
    common_config(pose);
    pose->add_option("--points", o.points, "le, re, nose, ml, mr, chin as x,y pairs")
        ->required()
        ->delimiter(',')
        ->expected(12);
    pose->add_option("--width", o.width, "Image width");
    pose->add_option("--height", o.height, "Image height");
    pose->callback([&] { selected = cmd_pose; });

    auto* events = app.add_subcommand("events", "Timeseries to drowsiness events");
    common_config(events);
    io(events, "Timeseries, - for stdin");
    events->add_option("--format", o.format, "Input format, csv or jsonl");
    events->callback([&] { selected = cmd_events; });

    auto* stats = app.add_subcommand("stats", "Windowed statistics");
    common_config(stats);
    io(stats, "Timeseries, - for stdin");
    stats->add_option("--format", o.format, "Input format, csv or jsonl");
    stats->add_option("--window-ms", o.window_ms, "Window length")->check(CLI::PositiveNumber);
    stats->add_option("--stride-ms", o.stride_ms, "Window stride, defaults to the window length");
    stats->callback([&] { selected = cmd_stats; });

    auto* synth = app.add_subcommand("synth", "Scenario to synthetic detections");
    io(synth, "Scenario JSON");
    synth->add_option("--truth", o.truth, "Ground-truth JSONL path");
    synth->add_option("--seed", o.seed, "Override the scenario seed");
    synth->callback([&] { selected = cmd_synth; });

    auto* report = app.add_subcommand("report", "Model comparison table");
    io(report, "JSON array of {model, accuracy, loss}");
    report->callback([&] { selected = cmd_report; });

    auto* evaluate = app.add_subcommand("evaluate", "Score a classifier on a labelled ROI manifest");
    common_config(evaluate);
    io(evaluate, "Manifest JSONL");
    evaluate->add_option("--classifier", o.classifier, "baseline or external");
    evaluate->add_option("--backend-cmd", o.backend_cmd, "External classifier command line");
    evaluate->add_option("--seed", o.seed, "Split seed");
    evaluate->callback([&] { selected = cmd_evaluate; });

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::Success& e)
    {
        return app.exit(e);
    }
    catch (const CLI::ParseError& e)
    {
        app.exit(e);
        return kExitConfig;
    }
    if (verbose)
        spdlog::set_level(spdlog::level::info);
    return guarded(selected, o);
}
