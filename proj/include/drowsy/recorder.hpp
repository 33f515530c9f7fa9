#pragma once

#include "drowsy/classify.hpp"
#include "drowsy/error.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

namespace drowsy {

struct PoseAngles
{
    double yaw_deg = 0.0;
    double pitch_deg = 0.0;
    double roll_deg = 0.0;
    friend bool operator==(const PoseAngles&, const PoseAngles&) = default;
};

/// One row of the extracted timeseries.
struct FrameRecord
{
    std::int64_t frame_index = 0;
    std::int64_t timestamp_ms = 0;
    bool face_detected = false;
    bool held = false; ///< no detection; fields copied from the last valid record
    State eye_state = State::unknown;
    double eye_conf = 0.0;
    State mouth_state = State::unknown;
    double mouth_conf = 0.0;
    std::optional<PoseAngles> pose;
    std::optional<double> reproj_rms_px;

    friend bool operator==(const FrameRecord&, const FrameRecord&) = default;
};

/// What the per-frame pipeline measured on a detected face.
struct FrameMeasurement
{
    StateVerdict eye;
    StateVerdict mouth;
    std::optional<PoseAngles> pose;
    std::optional<double> reproj_rms_px;
};

struct FrameResult
{
    std::int64_t frame_index = 0;
    std::int64_t timestamp_ms = 0;
    std::optional<FrameMeasurement> measurement; ///< empty when no face was detected
};

struct HoldPolicy
{
    bool enabled = true;
    std::int64_t max_hold_ms = 2000;
};

/// Single-writer stage turning frame results into records, in frame order.
class Recorder
{
public:
    explicit Recorder(HoldPolicy policy = {}) : policy_(policy) {}

    /// Throws NonMonotonicFrame if the frame index does not increase or time goes backwards.
    FrameRecord record_frame(const FrameResult& result);

    const std::optional<FrameRecord>& last_emitted() const { return last_emitted_; }
    const std::optional<FrameRecord>& last_valid() const { return last_valid_; }

private:
    HoldPolicy policy_;
    std::optional<FrameRecord> last_emitted_;
    std::optional<FrameRecord> last_valid_;
};

enum class TimeseriesFormat { csv, jsonl };

/// Column header of the CSV format (without the line feed).
inline constexpr const char* kTimeseriesCsvHeader = "frame,t_ms,detected,held,eye,eye_conf,mouth,mouth_conf,yaw,pitch,roll,rms";

/// Serialized line for one record, including the trailing LF.
std::string format_record(const FrameRecord& r, TimeseriesFormat format);

/// Streaming writer; each record reaches the sink as one complete line.
class TimeseriesWriter
{
public:
    /// Writes the CSV header immediately. Throws SinkError.
    TimeseriesWriter(std::ostream& sink, TimeseriesFormat format);

    void write(const FrameRecord& r);
    std::size_t bytes_written() const { return bytes_; }

private:
    void put(const std::string& line);

    std::ostream& sink_;
    TimeseriesFormat format_;
    std::size_t bytes_ = 0;
};

/// Writes a whole record list and returns the byte count. Throws SinkError.
std::size_t write_timeseries(const std::vector<FrameRecord>& records, std::ostream& sink, TimeseriesFormat format);

struct TimeseriesReadResult
{
    std::vector<FrameRecord> records; ///< everything before the first bad line
    std::optional<ParseError> error;
};

/// Inverse of write_timeseries. Every line, including the last, must end with LF.
TimeseriesReadResult read_timeseries(std::istream& source, TimeseriesFormat format);

} // namespace drowsy
