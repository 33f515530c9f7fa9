#include "drowsy/recorder.hpp"

#include "drowsy/text.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <istream>
#include <iterator>
#include <ostream>

namespace drowsy {

FrameRecord Recorder::record_frame(const FrameResult& result)
{
    if (last_emitted_)
    {
        if (result.frame_index <= last_emitted_->frame_index)
            throw NonMonotonicFrame(fmt::format("frame {} after frame {}", result.frame_index,
                                                last_emitted_->frame_index));
        if (result.timestamp_ms < last_emitted_->timestamp_ms)
            throw NonMonotonicFrame(fmt::format("timestamp {} ms after {} ms", result.timestamp_ms,
                                                last_emitted_->timestamp_ms));
    }

    FrameRecord rec;
    rec.frame_index = result.frame_index;
    rec.timestamp_ms = result.timestamp_ms;

    if (result.measurement)
    {
        const FrameMeasurement& m = *result.measurement;
        rec.face_detected = true;
        rec.eye_state = m.eye.state;
        rec.eye_conf = m.eye.confidence;
        rec.mouth_state = m.mouth.state;
        rec.mouth_conf = m.mouth.confidence;
        rec.pose = m.pose;
        rec.reproj_rms_px = m.pose ? m.reproj_rms_px : std::nullopt;
        last_valid_ = rec;
    }
    else if (policy_.enabled && last_valid_ && result.timestamp_ms - last_valid_->timestamp_ms <= policy_.max_hold_ms)
    {
        rec = *last_valid_;
        rec.frame_index = result.frame_index;
        rec.timestamp_ms = result.timestamp_ms;
        rec.face_detected = false;
        rec.held = true;
    }

    last_emitted_ = rec;
    return rec;
}

namespace {

std::string optional_real(const std::optional<double>& v) { return v ? format_fixed6(*v) : std::string(); }

} // namespace

std::string format_record(const FrameRecord& r, TimeseriesFormat format)
{
    if (format == TimeseriesFormat::csv)
    {
        return fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", r.frame_index, r.timestamp_ms,
                           r.face_detected ? 1 : 0, r.held ? 1 : 0, to_string(r.eye_state), format_fixed6(r.eye_conf),
                           to_string(r.mouth_state), format_fixed6(r.mouth_conf),
                           r.pose ? format_fixed6(r.pose->yaw_deg) : "", r.pose ? format_fixed6(r.pose->pitch_deg) : "",
                           r.pose ? format_fixed6(r.pose->roll_deg) : "", optional_real(r.reproj_rms_px));
    }

    std::string s = fmt::format(R"({{"frame_index":{},"timestamp_ms":{},"face_detected":{},"held":{},)"
                                R"("eye_state":"{}","eye_conf":{},"mouth_state":"{}","mouth_conf":{})",
                                r.frame_index, r.timestamp_ms, r.face_detected, r.held, to_string(r.eye_state),
                                format_fixed6(r.eye_conf), to_string(r.mouth_state), format_fixed6(r.mouth_conf));
    if (r.pose)
        s += fmt::format(R"(,"yaw_deg":{},"pitch_deg":{},"roll_deg":{})", format_fixed6(r.pose->yaw_deg),
                         format_fixed6(r.pose->pitch_deg), format_fixed6(r.pose->roll_deg));
    if (r.reproj_rms_px)
        s += fmt::format(R"(,"reproj_rms_px":{})", format_fixed6(*r.reproj_rms_px));
    s += "}\n";
    return s;
}

TimeseriesWriter::TimeseriesWriter(std::ostream& sink, TimeseriesFormat format) : sink_(sink), format_(format)
{
    if (format_ == TimeseriesFormat::csv)
        put(std::string(kTimeseriesCsvHeader) + "\n");
}

void TimeseriesWriter::put(const std::string& line)
{
    sink_.write(line.data(), static_cast<std::streamsize>(line.size()));
    sink_.flush();
    if (!sink_)
        throw SinkError("failed to write timeseries line");
    bytes_ += line.size();
}

void TimeseriesWriter::write(const FrameRecord& r) { put(format_record(r, format_)); }

std::size_t write_timeseries(const std::vector<FrameRecord>& records, std::ostream& sink, TimeseriesFormat format)
{
    TimeseriesWriter w(sink, format);
    for (const auto& r : records)
        w.write(r);
    return w.bytes_written();
}

namespace {

State state_or_throw(std::string_view s, std::size_t line)
{
    auto st = parse_state(s);
    if (!st)
        throw ParseError(line, fmt::format("invalid state '{}'", s));
    return *st;
}

double real_or_throw(std::string_view s, std::size_t line, const char* field)
{
    auto v = parse_real(s);
    if (!v)
        throw ParseError(line, fmt::format("invalid {} '{}'", field, s));
    return *v;
}

bool flag_or_throw(std::string_view s, std::size_t line, const char* field)
{
    if (s == "0")
        return false;
    if (s == "1")
        return true;
    throw ParseError(line, fmt::format("{} must be 0 or 1", field));
}

FrameRecord parse_csv_line(std::string_view line, std::size_t line_no)
{
    const auto f = split(line, ',');
    if (f.size() != 12)
        throw ParseError(line_no, fmt::format("expected 12 fields, found {}", f.size()));

    FrameRecord r;
    auto frame = parse_int(f[0]);
    auto t = parse_int(f[1]);
    if (!frame || !t)
        throw ParseError(line_no, "invalid frame index or timestamp");
    r.frame_index = *frame;
    r.timestamp_ms = *t;
    r.face_detected = flag_or_throw(f[2], line_no, "detected");
    r.held = flag_or_throw(f[3], line_no, "held");
    r.eye_state = state_or_throw(f[4], line_no);
    r.eye_conf = real_or_throw(f[5], line_no, "eye_conf");
    r.mouth_state = state_or_throw(f[6], line_no);
    r.mouth_conf = real_or_throw(f[7], line_no, "mouth_conf");

    const bool any_pose = !f[8].empty() || !f[9].empty() || !f[10].empty();
    if (any_pose)
    {
        if (f[8].empty() || f[9].empty() || f[10].empty())
            throw ParseError(line_no, "pose angles must be all present or all absent");
        r.pose = PoseAngles{real_or_throw(f[8], line_no, "yaw"), real_or_throw(f[9], line_no, "pitch"),
                            real_or_throw(f[10], line_no, "roll")};
    }
    if (!f[11].empty())
        r.reproj_rms_px = real_or_throw(f[11], line_no, "rms");
    return r;
}

FrameRecord parse_jsonl_line(std::string_view line, std::size_t line_no)
{
    nlohmann::json j;
    try
    {
        j = nlohmann::json::parse(line);
    }
    catch (const nlohmann::json::parse_error& e)
    {
        throw ParseError(line_no, e.what());
    }
    try
    {
        FrameRecord r;
        r.frame_index = j.at("frame_index").get<std::int64_t>();
        r.timestamp_ms = j.at("timestamp_ms").get<std::int64_t>();
        r.face_detected = j.at("face_detected").get<bool>();
        r.held = j.at("held").get<bool>();
        r.eye_state = state_or_throw(j.at("eye_state").get<std::string>(), line_no);
        r.eye_conf = j.at("eye_conf").get<double>();
        r.mouth_state = state_or_throw(j.at("mouth_state").get<std::string>(), line_no);
        r.mouth_conf = j.at("mouth_conf").get<double>();
        const int n_angles = static_cast<int>(j.contains("yaw_deg")) + static_cast<int>(j.contains("pitch_deg")) +
                             static_cast<int>(j.contains("roll_deg"));
        if (n_angles == 3)
            r.pose = PoseAngles{j["yaw_deg"].get<double>(), j["pitch_deg"].get<double>(), j["roll_deg"].get<double>()};
        else if (n_angles != 0)
            throw ParseError(line_no, "pose angles must be all present or all absent");
        if (j.contains("reproj_rms_px"))
            r.reproj_rms_px = j["reproj_rms_px"].get<double>();
        return r;
    }
    catch (const nlohmann::json::exception& e)
    {
        throw ParseError(line_no, e.what());
    }
}

void check_record(const FrameRecord& r, const FrameRecord* prev, std::size_t line_no)
{
    if (r.held && r.face_detected)
        throw ParseError(line_no, "a held record cannot be a detection");
    if (r.eye_conf < 0.0 || r.eye_conf > 1.0 || r.mouth_conf < 0.0 || r.mouth_conf > 1.0)
        throw ParseError(line_no, "confidence outside [0,1]");
    if (prev && (r.frame_index <= prev->frame_index || r.timestamp_ms < prev->timestamp_ms))
        throw ParseError(line_no, "frames must be strictly increasing with non-decreasing time");
}

} // namespace

TimeseriesReadResult read_timeseries(std::istream& source, TimeseriesFormat format)
{
    const std::string text{std::istreambuf_iterator<char>(source), std::istreambuf_iterator<char>()};
    TimeseriesReadResult result;

    std::size_t pos = 0;
    std::size_t line_no = 0;
    try
    {
        while (pos < text.size())
        {
            ++line_no;
            const auto nl = text.find('\n', pos);
            if (nl == std::string::npos)
                throw ParseError(line_no, "truncated line (missing line feed)");
            const std::string_view line(text.data() + pos, nl - pos);
            pos = nl + 1;

            if (format == TimeseriesFormat::csv && line_no == 1)
            {
                if (line != kTimeseriesCsvHeader)
                    throw ParseError(line_no, "unexpected CSV header");
                continue;
            }
            FrameRecord r = format == TimeseriesFormat::csv ? parse_csv_line(line, line_no)
                                                            : parse_jsonl_line(line, line_no);
            check_record(r, result.records.empty() ? nullptr : &result.records.back(), line_no);
            result.records.push_back(std::move(r));
        }
    }
    catch (const ParseError& e)
    {
        result.error = e;
    }
    return result;
}

} // namespace drowsy
