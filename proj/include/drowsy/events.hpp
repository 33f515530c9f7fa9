#pragma once

#include "drowsy/recorder.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace drowsy {

enum class Channel { eye, mouth };

/// A maximal open or closed interval on one channel, [start_ms, end_ms).
struct Episode
{
    Channel channel = Channel::eye;
    State state = State::open;
    std::int64_t start_ms = 0;
    std::int64_t end_ms = 0;
    std::int64_t first_frame = 0;
    std::int64_t last_frame = 0;

    std::int64_t duration_ms() const { return end_ms - start_ms; }
    friend bool operator==(const Episode&, const Episode&) = default;
};

enum class EventKind { blink, prolonged_closure, yawn, nod };

const char* to_string(EventKind k);

struct DrowsinessEvent
{
    EventKind kind = EventKind::blink;
    std::int64_t start_ms = 0;
    std::int64_t end_ms = 0;
    /// Duration in ms for blinks, closures and yawns; pitch drop in degrees for nods.
    double magnitude = 0.0;
    friend bool operator==(const DrowsinessEvent&, const DrowsinessEvent&) = default;
};

struct EventConfig
{
    std::int64_t blink_max_ms = 500;
    std::int64_t closure_min_ms = 2000;
    std::int64_t yawn_min_ms = 2000;
    double nod_delta_deg = 15.0;
    std::int64_t nod_fall_max_ms = 1000;
    std::int64_t nod_recover_max_ms = 2000;
    std::int64_t debounce_ms = 100;
    std::int64_t baseline_window_ms = 30000;

    /// Throws ConfigError for non-positive thresholds or blink_max_ms >= closure_min_ms.
    void validate() const;
};

/// Time covered by each record: up to the next record's timestamp. The last record lasts as
/// long as the previous interval (1 ms for a single record).
std::vector<std::int64_t> frame_end_times(const std::vector<FrameRecord>& records);

/// Runs of equal known state. Unknown frames extend the current run; leading and trailing
/// unknown frames belong to no episode. Runs shorter than debounce_ms are merged into their
/// neighbours, shortest first (earliest on ties), until none is left or one run remains.
std::vector<Episode> segment_episodes(const std::vector<FrameRecord>& records, Channel channel,
                                      std::int64_t debounce_ms);

/// Blinks, prolonged closures, yawns and nods, sorted by start time.
std::vector<DrowsinessEvent> detect_events(const std::vector<Episode>& eye_episodes,
                                           const std::vector<Episode>& mouth_episodes,
                                           const std::vector<FrameRecord>& records, const EventConfig& cfg);

/// Pitch drops of at least nod_delta_deg below a trailing rolling median, reached within
/// nod_fall_max_ms and recovered to within nod_delta_deg/2 inside nod_recover_max_ms.
std::vector<DrowsinessEvent> detect_nods(const std::vector<FrameRecord>& records, const EventConfig& cfg);

struct WindowStats
{
    std::int64_t window_start_ms = 0;
    std::int64_t window_end_ms = 0;
    std::int64_t blink_count = 0;
    std::int64_t yawn_count = 0;
    std::int64_t nod_count = 0;
    std::optional<double> closed_fraction; ///< closed share of known-eye time; empty if none is known
    double held_fraction = 0.0;            ///< held frames / frames
    double valid_fraction = 0.0;           ///< frames with a known eye state (held included) / frames
    std::optional<double> mean_pitch_deg;  ///< over frames that carry a pose
};

/// Windows [s, s + window_ms) for s = t0, t0 + stride_ms, ... while s < stream end. Frames are
/// assigned by their timestamp, events by start time. Throws EmptyStream or ConfigError.
std::vector<WindowStats> window_stats(const std::vector<FrameRecord>& records,
                                      const std::vector<DrowsinessEvent>& events, std::int64_t window_ms,
                                      std::int64_t stride_ms);

/// One JSON object per line: {"kind","start_ms","end_ms","magnitude"}.
void write_events(const std::vector<DrowsinessEvent>& events, std::ostream& out);

inline constexpr const char* kStatsCsvHeader =
    "win_start_ms,win_end_ms,blinks,yawns,nods,closed_frac,held_frac,valid_frac,mean_pitch";

void write_stats(const std::vector<WindowStats>& stats, std::ostream& out);

} // namespace drowsy
