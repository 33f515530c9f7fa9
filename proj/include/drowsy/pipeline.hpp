#pragma once

#include "drowsy/config.hpp"
#include "drowsy/detections.hpp"
#include "drowsy/recorder.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace drowsy {

/// Supplies the pixels of an ROI. The pipeline never sees whole frames.
class RoiSource
{
public:
    virtual ~RoiSource() = default;

    /// nullopt when no pixels are available; the verdict is then unknown.
    virtual std::optional<RoiImage> fetch(const DetectionFrame& frame, const FaceDetection& face,
                                          const RoiRect& roi) = 0;
};

/// Renders the synthetic pattern named by the detection's hint at the ROI's size.
class HintRoiSource final : public RoiSource
{
public:
    std::optional<RoiImage> fetch(const DetectionFrame& frame, const FaceDetection& face,
                                  const RoiRect& roi) override;
};

std::unique_ptr<Classifier> make_classifier(const ClassifierSpec& spec);

struct ProcessedFrame
{
    FrameRecord record;
    std::optional<HeadPose> pose; ///< solver output for the selected face, usable or not
    std::vector<std::string> warnings;
};

/// Per-frame extraction: face selection, chin, ROIs, classification, pose, recording.
class Pipeline
{
public:
    Pipeline(PipelineConfig config, std::unique_ptr<Classifier> eye, std::unique_ptr<Classifier> mouth,
             std::unique_ptr<RoiSource> source);

    /// Baseline or external classifiers per the config, hint-rendered ROIs.
    explicit Pipeline(PipelineConfig config);

    /// Throws NonMonotonicFrame and ProtocolError.
    ProcessedFrame process(const DetectionFrame& frame);

    const PipelineConfig& config() const { return config_; }

private:
    PipelineConfig config_;
    CameraModel camera_;
    std::unique_ptr<Classifier> eye_;
    std::unique_ptr<Classifier> mouth_;
    std::unique_ptr<RoiSource> source_;
    Recorder recorder_;
};

} // namespace drowsy
