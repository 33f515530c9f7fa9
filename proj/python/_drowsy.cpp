#include "drowsy/classify.hpp"
#include "drowsy/config.hpp"
#include "drowsy/detections.hpp"
#include "drowsy/error.hpp"
#include "drowsy/events.hpp"
#include "drowsy/face.hpp"
#include "drowsy/pipeline.hpp"
#include "drowsy/pose.hpp"
#include "drowsy/recorder.hpp"
#include "drowsy/synth.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace drowsy;

namespace {

using Points6 = std::array<std::pair<double, double>, 6>;

py::dict pose_dict(const HeadPose& p)
{
    py::dict d;
    d["status"] = to_string(p.status);
    d["yaw"] = p.yaw_deg;
    d["pitch"] = p.pitch_deg;
    d["roll"] = p.roll_deg;
    d["rms"] = p.reproj_rms_px;
    d["iterations"] = p.iterations;
    return d;
}

py::dict solve(const Points6& pts, int width, int height)
{
    std::array<Point2, 6> p;
    for (std::size_t i = 0; i < 6; ++i)
        p[i] = {pts[i].first, pts[i].second};
    return pose_dict(solve_pnp(LandmarkSet6::from_points(p), FaceModel3D::canonical(), default_camera(width, height)));
}

std::vector<std::pair<double, double>> project_model(double yaw, double pitch, double roll,
                                                     std::array<double, 3> tvec, int width, int height)
{
    const Vec3 r = rotation_to_rvec(euler_to_rotation({yaw, pitch, roll}));
    const auto p = project(FaceModel3D::canonical(), r, Vec3(tvec[0], tvec[1], tvec[2]), default_camera(width, height));
    std::vector<std::pair<double, double>> out;
    for (const auto& q : p)
        out.emplace_back(q.x, q.y);
    return out;
}

py::tuple classify_pixels(const std::string& kind, int width, int height, const std::vector<int>& pixels)
{
    const auto k = parse_roi_kind(kind);
    if (!k)
        throw py::value_error("kind must be 'eye' or 'mouth'");
    RoiImage img;
    img.kind = *k;
    img.width = width;
    img.height = height;
    for (int v : pixels)
    {
        if (v < 0 || v > 255)
            throw py::value_error("pixel values must be in 0..255");
        img.pixels.push_back(static_cast<std::uint8_t>(v));
    }
    img.validate();
    const auto v = baseline_classify(img);
    return py::make_tuple(to_string(v.state), v.confidence);
}

py::tuple synthesize(const std::string& scenario_json)
{
    const auto out = generate(parse_scenario(scenario_json));
    std::vector<std::string> det;
    std::vector<std::string> truth;
    for (const auto& d : out.detections)
        det.push_back(format_detection_line(d));
    for (const auto& t : out.truth)
        truth.push_back(format_truth_line(t));
    return py::make_tuple(det, truth);
}

std::string extract(const std::vector<std::string>& lines, const std::string& config_json)
{
    Pipeline pipeline(config_json.empty() ? PipelineConfig{} : parse_config(config_json));
    std::ostringstream out;
    TimeseriesWriter writer(out, pipeline.config().format);
    std::size_t n = 0;
    for (const auto& line : lines)
        writer.write(pipeline.process(parse_detection_line(line, ++n)).record);
    return out.str();
}

std::vector<py::dict> events_from_timeseries(const std::string& text, const std::string& format)
{
    const auto f = parse_format(format);
    if (!f)
        throw ConfigError("format must be csv or jsonl");
    std::istringstream in(text);
    auto res = read_timeseries(in, *f);
    if (res.error)
        throw *res.error;
    const EventConfig cfg;
    const auto ev = detect_events(segment_episodes(res.records, Channel::eye, cfg.debounce_ms),
                                  segment_episodes(res.records, Channel::mouth, cfg.debounce_ms), res.records, cfg);
    std::vector<py::dict> out;
    for (const auto& e : ev)
    {
        py::dict d;
        d["kind"] = to_string(e.kind);
        d["start_ms"] = e.start_ms;
        d["end_ms"] = e.end_ms;
        d["magnitude"] = e.magnitude;
        out.push_back(d);
    }
    return out;
}

py::dict metrics(std::uint64_t tp, std::uint64_t fp, std::uint64_t tn, std::uint64_t fn)
{
    const auto m = compute_metrics({tp, fp, tn, fn});
    py::dict d;
    d["accuracy"] = m.accuracy;
    d["precision"] = m.precision;
    d["recall"] = m.recall;
    return d;
}

std::string comparison(const std::vector<std::tuple<std::string, double, double>>& rows)
{
    std::vector<ModelReportRow> r;
    for (const auto& [name, acc, loss] : rows)
        r.push_back({name, acc, loss});
    return format_model_comparison(std::move(r));
}

} // namespace

PYBIND11_MODULE(_drowsy, m)
{
    m.doc() = "Drowsiness information extraction";

    auto base = py::register_exception<Error>(m, "Error");
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<ParseError>(m, "ParseError", base.ptr());

    m.def("solve_pnp", &solve, py::arg("points"), py::arg("width") = 640, py::arg("height") = 480);
    m.def("project", &project_model, py::arg("yaw"), py::arg("pitch"), py::arg("roll"),
          py::arg("tvec") = std::array<double, 3>{0.0, 0.0, 1000.0}, py::arg("width") = 640,
          py::arg("height") = 480);
    m.def("baseline_classify", &classify_pixels, py::arg("kind"), py::arg("width"), py::arg("height"),
          py::arg("pixels"));
    m.def("synthesize", &synthesize, py::arg("scenario_json"));
    m.def("extract", &extract, py::arg("detection_lines"), py::arg("config_json") = "");
    m.def("detect_events", &events_from_timeseries, py::arg("timeseries"), py::arg("format") = "csv");
    m.def("compute_metrics", &metrics, py::arg("tp"), py::arg("fp"), py::arg("tn"), py::arg("fn"));
    m.def("format_model_comparison", &comparison, py::arg("rows"));
}
