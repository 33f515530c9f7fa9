#include "drowsy/pipeline.hpp"

#include "drowsy/error.hpp"
#include "drowsy/external_classifier.hpp"
#include "drowsy/synth.hpp"

#include <fmt/format.h>

#include <chrono>

namespace drowsy {

std::optional<RoiImage> HintRoiSource::fetch(const DetectionFrame&, const FaceDetection& face, const RoiRect& roi)
{
    if (!face.hint)
        return std::nullopt;
    const State s = roi.kind == RoiKind::eye ? face.hint->eye : face.hint->mouth;
    if (s == State::unknown)
        return std::nullopt;
    return render_roi(roi.kind, s, roi.width(), roi.height());
}

std::unique_ptr<Classifier> make_classifier(const ClassifierSpec& spec)
{
    if (spec.backend == ClassifierBackend::external)
        return std::make_unique<ExternalClassifier>(spec.command, std::chrono::milliseconds(spec.timeout_ms));
    return std::make_unique<BaselineClassifier>(spec.thresholds);
}

Pipeline::Pipeline(PipelineConfig config, std::unique_ptr<Classifier> eye, std::unique_ptr<Classifier> mouth,
                   std::unique_ptr<RoiSource> source)
    : config_(std::move(config)), camera_(config_.camera_model()), eye_(std::move(eye)), mouth_(std::move(mouth)),
      source_(std::move(source)), recorder_(config_.hold)
{
    config_.validate();
}

Pipeline::Pipeline(PipelineConfig config)
    : Pipeline(config, make_classifier(config.classifier), make_classifier(config.classifier),
               std::make_unique<HintRoiSource>())
{
}

ProcessedFrame Pipeline::process(const DetectionFrame& frame)
{
    ProcessedFrame out;
    FrameResult result{frame.frame_index, frame.timestamp_ms, std::nullopt};
    const ImageSize image = camera_.image_size();

    std::vector<FaceObservation> candidates;
    std::vector<std::size_t> origin;
    candidates.reserve(frame.faces.size());
    for (std::size_t i = 0; i < frame.faces.size(); ++i)
    {
        const FaceDetection& f = frame.faces[i];
        try
        {
            candidates.push_back(
                make_observation(f.bbox, f.landmarks, f.confidence, frame.frame_index, frame.timestamp_ms, image));
            origin.push_back(i);
        }
        catch (const InvalidObservation& e)
        {
            out.warnings.push_back(fmt::format("frame {}: face {} rejected: {}", frame.frame_index, i, e.what()));
        }
    }

    if (auto pick = select_face_index(candidates))
    {
        const FaceObservation& obs = candidates[*pick];
        const FaceDetection& face = frame.faces[origin[*pick]];
        FrameMeasurement m;

        auto classify_kind = [&](RoiKind kind, Classifier& backend) -> StateVerdict {
            try
            {
                const RoiRect roi =
                    kind == RoiKind::eye ? eye_roi(obs, config_.eye_side, image) : mouth_roi(obs, image);
                auto pixels = source_->fetch(frame, face, roi);
                if (!pixels)
                    return StateVerdict::unknown();
                return classify_roi(*pixels, backend);
            }
            catch (const DegenerateRoi& e)
            {
                out.warnings.push_back(fmt::format("frame {}: {} ROI: {}", frame.frame_index, to_string(kind), e.what()));
                return StateVerdict::unknown();
            }
        };
        m.eye = classify_kind(RoiKind::eye, *eye_);
        m.mouth = classify_kind(RoiKind::mouth, *mouth_);

        try
        {
            const LandmarkSet6 six = derive_chin(obs, config_.chin_ratio);
            HeadPose pose = solve_pnp(six, config_.face_model, camera_, config_.solver);
            if (pose.usable())
            {
                m.pose = PoseAngles{pose.yaw_deg, pose.pitch_deg, pose.roll_deg};
                m.reproj_rms_px = pose.reproj_rms_px;
            }
            else
            {
                out.warnings.push_back(
                    fmt::format("frame {}: pose not reported ({})", frame.frame_index, to_string(pose.status)));
            }
            out.pose = pose;
        }
        catch (const DegenerateFace& e)
        {
            out.warnings.push_back(fmt::format("frame {}: {}", frame.frame_index, e.what()));
        }
        result.measurement = m;
    }

    out.record = recorder_.record_frame(result);
    return out;
}

} // namespace drowsy
