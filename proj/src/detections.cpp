#include "drowsy/detections.hpp"

#include "drowsy/error.hpp"
#include "drowsy/text.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <cmath>
#include <istream>

namespace drowsy {

namespace {

using nlohmann::json;

Point2 read_point(const json& j, const char* key)
{
    const json& p = j.at(key);
    if (!p.is_array() || p.size() != 2)
        throw std::invalid_argument(fmt::format("landmark '{}' must be [x, y]", key));
    return {p[0].get<double>(), p[1].get<double>()};
}

std::string point_text(Point2 p) { return fmt::format("[{},{}]", format_fixed6(p.x), format_fixed6(p.y)); }

} // namespace

DetectionFrame parse_detection_line(std::string_view line, std::size_t line_no)
{
    json j;
    try
    {
        j = json::parse(line);
    }
    catch (const json::parse_error& e)
    {
        throw ParseError(line_no, e.what());
    }

    try
    {
        DetectionFrame f;
        f.frame_index = j.at("frame").get<std::int64_t>();
        f.timestamp_ms = j.at("t_ms").get<std::int64_t>();
        if (f.frame_index < 0 || f.timestamp_ms < 0)
            throw ParseError(line_no, "frame and t_ms must be non-negative");
        const json& faces = j.at("faces");
        if (!faces.is_array())
            throw ParseError(line_no, "faces must be an array");
        for (const json& fj : faces)
        {
            FaceDetection d;
            const json& b = fj.at("bbox");
            if (!b.is_array() || b.size() != 4)
                throw ParseError(line_no, "bbox must be [x, y, w, h]");
            d.bbox = {b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()};
            if (!(d.bbox.width > 0.0) || !(d.bbox.height > 0.0))
                throw ParseError(line_no, "bbox width and height must be positive");
            d.confidence = fj.at("conf").get<double>();
            if (!(d.confidence >= 0.0 && d.confidence <= 1.0))
                throw ParseError(line_no, "conf must lie in [0, 1]");
            const json& lm = fj.at("lm");
            d.landmarks = {read_point(lm, "le"), read_point(lm, "re"), read_point(lm, "nose"), read_point(lm, "ml"),
                           read_point(lm, "mr")};
            if (fj.contains("hint"))
            {
                const json& h = fj["hint"];
                RoiHint hint;
                if (h.contains("eye"))
                    hint.eye = parse_state(h["eye"].get<std::string>()).value_or(State::unknown);
                if (h.contains("mouth"))
                    hint.mouth = parse_state(h["mouth"].get<std::string>()).value_or(State::unknown);
                d.hint = hint;
            }
            f.faces.push_back(d);
        }
        return f;
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

std::string format_detection_line(const DetectionFrame& frame)
{
    std::string s = fmt::format(R"({{"frame":{},"t_ms":{},"faces":[)", frame.frame_index, frame.timestamp_ms);
    for (std::size_t i = 0; i < frame.faces.size(); ++i)
    {
        const FaceDetection& d = frame.faces[i];
        const FiveLandmarks& lm = d.landmarks;
        if (i > 0)
            s += ',';
        s += fmt::format(R"({{"bbox":[{},{},{},{}],"conf":{},"lm":{{"le":{},"re":{},"nose":{},"ml":{},"mr":{}}})",
                         format_fixed6(d.bbox.x), format_fixed6(d.bbox.y), format_fixed6(d.bbox.width),
                         format_fixed6(d.bbox.height), format_fixed6(d.confidence), point_text(lm.left_eye),
                         point_text(lm.right_eye), point_text(lm.nose), point_text(lm.mouth_left),
                         point_text(lm.mouth_right));
        if (d.hint)
            s += fmt::format(R"(,"hint":{{"eye":"{}","mouth":"{}"}})", to_string(d.hint->eye),
                             to_string(d.hint->mouth));
        s += '}';
    }
    s += "]}";
    return s;
}

std::optional<DetectionFrame> DetectionReader::next()
{
    std::string line;
    while (std::getline(in_, line))
    {
        ++line_;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        return parse_detection_line(line, line_);
    }
    return std::nullopt;
}

} // namespace drowsy
