#include "drowsy/synth.hpp"

#include "drowsy/error.hpp"
#include "drowsy/text.hpp"
#include "json_util.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace drowsy {

using detail::json;
using detail::value_or;

void Scenario::validate() const
{
    if (!(fps > 0.0) || !std::isfinite(fps))
        throw ConfigError("fps must be positive");
    if (duration_ms <= 0)
        throw ConfigError("duration_ms must be positive");
    if (!(noise_px >= 0.0) || !std::isfinite(noise_px))
        throw ConfigError("noise_px must be non-negative");
    if (!(bbox_inflation >= 0.0))
        throw ConfigError("bbox_inflation must be non-negative");
    if (segments.empty())
        throw ConfigError("scenario has no segments");
    std::int64_t cursor = 0;
    for (std::size_t i = 0; i < segments.size(); ++i)
    {
        const auto& s = segments[i];
        if (s.end_ms <= s.start_ms)
            throw ConfigError(fmt::format("segment {} is empty or reversed", i));
        if (s.start_ms < cursor)
            throw ConfigError(fmt::format("segment {} overlaps the previous one", i));
        if (s.start_ms > cursor)
            throw ConfigError(fmt::format("gap before segment {} at {} ms", i, cursor));
        cursor = s.end_ms;
    }
    if (cursor != duration_ms)
        throw ConfigError(fmt::format("segments end at {} ms, duration is {} ms", cursor, duration_ms));
    for (const auto& [a, b] : dropout)
        if (b < a)
            throw ConfigError("dropout interval is reversed");
    try
    {
        camera.validate();
    }
    catch (const InvalidDimensions& e)
    {
        throw ConfigError(e.what());
    }
    model.validate();
}

std::int64_t Scenario::frame_time(std::int64_t i) const
{
    return std::llround(static_cast<double>(i) * 1000.0 / fps);
}

namespace {

AngleRamp parse_ramp(const json& seg, const char* key)
{
    if (!seg.contains(key))
        return {};
    const json& v = seg[key];
    if (v.is_number())
        return {v.get<double>(), v.get<double>()};
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
        return {v[0].get<double>(), v[1].get<double>()};
    throw ConfigError(std::string(key) + " must be a number or [start, end]");
}

State parse_scripted_state(const json& seg, const char* key, State fallback)
{
    const auto s = value_or<std::string>(seg, key, to_string(fallback));
    auto st = parse_state(s);
    if (!st || *st == State::unknown)
        throw ConfigError(std::string(key) + " must be open or closed");
    return *st;
}

} // namespace

Scenario parse_scenario(std::string_view json_text)
{
    json j;
    try
    {
        j = json::parse(json_text);
    }
    catch (const json::parse_error& e)
    {
        throw ConfigError(std::string("scenario is not valid JSON: ") + e.what());
    }
    if (!j.is_object())
        throw ConfigError("scenario must be a JSON object");

    Scenario s;
    s.fps = value_or(j, "fps", s.fps);
    s.duration_ms = value_or(j, "duration_ms", s.duration_ms);
    const ImageSize image = detail::parse_image_size(j, {640, 480});
    s.camera = detail::resolve_camera(detail::parse_camera(j, image), image);
    if (j.contains("base_tvec"))
    {
        const auto t = value_or<std::vector<double>>(j, "base_tvec", {});
        if (t.size() != 3)
            throw ConfigError("base_tvec must be [x, y, z]");
        s.base_tvec = Vec3(t[0], t[1], t[2]);
    }
    s.noise_px = value_or(j, "noise_px", s.noise_px);
    s.seed = value_or(j, "seed", s.seed);
    s.bbox_inflation = value_or(j, "bbox_inflation", s.bbox_inflation);
    if (j.contains("dropout"))
    {
        const json& d = j["dropout"];
        if (!d.is_array())
            throw ConfigError("dropout must be a list of [start_ms, end_ms]");
        for (const json& g : d)
        {
            if (!g.is_array() || g.size() != 2 || !g[0].is_number_integer() || !g[1].is_number_integer())
                throw ConfigError("dropout must be a list of [start_ms, end_ms]");
            s.dropout.emplace_back(g[0].get<std::int64_t>(), g[1].get<std::int64_t>());
        }
    }
    if (!j.contains("segments") || !j["segments"].is_array())
        throw ConfigError("scenario needs a segments list");
    for (const json& g : j["segments"])
    {
        if (!g.is_object())
            throw ConfigError("segment must be an object");
        ScenarioSegment seg;
        seg.start_ms = value_or<std::int64_t>(g, "start_ms", -1);
        seg.end_ms = value_or<std::int64_t>(g, "end_ms", -1);
        seg.yaw = parse_ramp(g, "yaw");
        seg.pitch = parse_ramp(g, "pitch");
        seg.roll = parse_ramp(g, "roll");
        seg.eye = parse_scripted_state(g, "eye_state", State::open);
        seg.mouth = parse_scripted_state(g, "mouth_state", State::closed);
        s.segments.push_back(seg);
    }
    s.validate();
    return s;
}

Scenario load_scenario(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open scenario " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str());
}

SynthOutput generate(const Scenario& scn)
{
    scn.validate();
    SynthOutput out;
    std::mt19937_64 rng(scn.seed);
    std::normal_distribution<double> noise(0.0, scn.noise_px > 0.0 ? scn.noise_px : 1.0);
    auto jitter = [&](Point2 p) {
        if (scn.noise_px <= 0.0)
            return p;
        const double dx = noise(rng);
        const double dy = noise(rng);
        return Point2{p.x + dx, p.y + dy};
    };

    std::size_t seg = 0;
    for (std::int64_t i = 0;; ++i)
    {
        const std::int64_t t = scn.frame_time(i);
        if (t >= scn.duration_ms)
            break;
        while (t >= scn.segments[seg].end_ms)
            ++seg;
        const ScenarioSegment& s = scn.segments[seg];
        const double f = static_cast<double>(t - s.start_ms) / static_cast<double>(s.end_ms - s.start_ms);

        TruthFrame truth{i, t, s.yaw.at(f), s.pitch.at(f), s.roll.at(f), s.eye, s.mouth};
        const Mat3 R = euler_to_rotation({truth.yaw_deg, truth.pitch_deg, truth.roll_deg});
        std::array<Point2, 6> p;
        try
        {
            p = project(scn.model, rotation_to_rvec(R), scn.base_tvec, scn.camera);
        }
        catch (const BehindCamera&)
        {
            throw ProjectionError(fmt::format("frame {} at {} ms projects behind the camera", i, t));
        }

        DetectionFrame det{i, t, {}};
        const bool dropped = std::any_of(scn.dropout.begin(), scn.dropout.end(),
                                         [t](const auto& g) { return t >= g.first && t < g.second; });
        if (!dropped)
        {
            double x0 = p[0].x, x1 = p[0].x, y0 = p[0].y, y1 = p[0].y;
            for (const Point2& q : p)
            {
                x0 = std::min(x0, q.x);
                x1 = std::max(x1, q.x);
                y0 = std::min(y0, q.y);
                y1 = std::max(y1, q.y);
            }
            const double w = x1 - x0;
            const double h = y1 - y0;
            FaceDetection face;
            face.bbox = {x0 - scn.bbox_inflation * w, y0 - scn.bbox_inflation * h, w * (1.0 + 2.0 * scn.bbox_inflation),
                         h * (1.0 + 2.0 * scn.bbox_inflation)};
            face.confidence = 0.99;
            face.landmarks = {jitter(p[0]), jitter(p[1]), jitter(p[2]), jitter(p[3]), jitter(p[4])};
            face.hint = RoiHint{s.eye, s.mouth};
            det.faces.push_back(face);
        }
        out.detections.push_back(std::move(det));
        out.truth.push_back(truth);
    }
    return out;
}

std::string format_truth_line(const TruthFrame& t)
{
    return fmt::format(R"({{"frame":{},"t_ms":{},"yaw":{},"pitch":{},"roll":{},"eye":"{}","mouth":"{}"}})",
                       t.frame_index, t.timestamp_ms, format_fixed6(t.yaw_deg), format_fixed6(t.pitch_deg),
                       format_fixed6(t.roll_deg), to_string(t.eye), to_string(t.mouth));
}

RoiImage render_roi(RoiKind kind, State state, int width, int height)
{
    if (width < 1 || height < 1)
        throw InvalidDimensions("ROI sides must be positive");
    RoiImage img{kind, width, height, std::vector<std::uint8_t>(static_cast<std::size_t>(width) * height, 128)};
    if (state != State::open)
        return img;
    const int band = std::max(1, static_cast<int>(std::lround(0.4 * height)));
    const int top = (height - band) / 2;
    for (int y = 0; y < height; ++y)
    {
        const std::uint8_t v = (y >= top && y < top + band) ? 30 : 220;
        std::fill_n(img.pixels.begin() + static_cast<std::ptrdiff_t>(y) * width, width, v);
    }
    return img;
}

} // namespace drowsy
