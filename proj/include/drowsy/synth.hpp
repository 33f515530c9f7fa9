#pragma once

#include "drowsy/classify.hpp"
#include "drowsy/detections.hpp"
#include "drowsy/pose.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace drowsy {

struct AngleRamp
{
    double start_deg = 0.0;
    double end_deg = 0.0;

    double at(double fraction) const { return start_deg + (end_deg - start_deg) * fraction; }
};

/// Scripted interval [start_ms, end_ms) with linearly interpolated head angles.
struct ScenarioSegment
{
    std::int64_t start_ms = 0;
    std::int64_t end_ms = 0;
    AngleRamp yaw;
    AngleRamp pitch;
    AngleRamp roll;
    State eye = State::open;
    State mouth = State::closed;
};

struct Scenario
{
    double fps = 10.0;
    std::int64_t duration_ms = 1000;
    CameraModel camera = default_camera(640, 480);
    Vec3 base_tvec{0.0, 0.0, 1000.0};
    std::vector<ScenarioSegment> segments;
    double noise_px = 0.0;
    std::vector<std::pair<std::int64_t, std::int64_t>> dropout; ///< [start, end) gaps without detections
    std::uint64_t seed = 0;
    double bbox_inflation = 0.25; ///< per side, relative to the projected model extent
    FaceModel3D model = FaceModel3D::canonical();

    /// Throws ConfigError (segments must tile [0, duration_ms) in order).
    void validate() const;

    /// Timestamp of frame i: round(i * 1000 / fps).
    std::int64_t frame_time(std::int64_t i) const;
};

/// Parses the scenario JSON (fields as in Scenario; camera as in the pipeline config).
/// Throws ConfigError.
Scenario parse_scenario(std::string_view json_text);
Scenario load_scenario(const std::filesystem::path& path);

struct TruthFrame
{
    std::int64_t frame_index = 0;
    std::int64_t timestamp_ms = 0;
    double yaw_deg = 0.0;
    double pitch_deg = 0.0;
    double roll_deg = 0.0;
    State eye = State::open;
    State mouth = State::closed;
};

struct SynthOutput
{
    std::vector<DetectionFrame> detections;
    std::vector<TruthFrame> truth;
};

/// Projects the model along the scripted motion. The chin is withheld from the detections.
/// Throws ProjectionError when a scripted pose puts the model behind the camera.
SynthOutput generate(const Scenario& scenario);

/// {"frame","t_ms","yaw","pitch","roll","eye","mouth"} without the line feed.
std::string format_truth_line(const TruthFrame& t);

/// Two-band pattern for open (dark band over 40% of the rows), uniform grey for closed.
RoiImage render_roi(RoiKind kind, State state, int width, int height);

} // namespace drowsy
