#pragma once

#include "drowsy/error.hpp"
#include "drowsy/face.hpp"
#include "drowsy/pose.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>

namespace drowsy::detail {

using nlohmann::json;

template <typename T>
T value_or(const json& j, const char* key, T fallback)
{
    if (!j.contains(key))
        return fallback;
    try
    {
        return j.at(key).get<T>();
    }
    catch (const json::exception&)
    {
        throw ConfigError(std::string("invalid value for '") + key + "'");
    }
}

inline ImageSize parse_image_size(const json& j, ImageSize fallback)
{
    if (!j.contains("image_size"))
        return fallback;
    const json& s = j["image_size"];
    if (!s.is_array() || s.size() != 2 || !s[0].is_number_integer() || !s[1].is_number_integer())
        throw ConfigError("image_size must be [width, height]");
    return {s[0].get<int>(), s[1].get<int>()};
}

/// "auto" (or absent) yields nullopt; an object yields explicit intrinsics for the image.
inline std::optional<CameraModel> parse_camera(const json& j, ImageSize image)
{
    if (!j.contains("camera"))
        return std::nullopt;
    const json& c = j["camera"];
    if (c.is_string())
    {
        if (c.get<std::string>() != "auto")
            throw ConfigError("camera must be \"auto\" or {fx, fy, cx, cy}");
        return std::nullopt;
    }
    if (!c.is_object())
        throw ConfigError("camera must be \"auto\" or {fx, fy, cx, cy}");
    CameraModel cam;
    try
    {
        cam.fx = c.at("fx").get<double>();
        cam.fy = c.at("fy").get<double>();
        cam.cx = c.at("cx").get<double>();
        cam.cy = c.at("cy").get<double>();
    }
    catch (const json::exception& e)
    {
        throw ConfigError(std::string("camera: ") + e.what());
    }
    cam.image_width = image.width;
    cam.image_height = image.height;
    return cam;
}

inline CameraModel resolve_camera(const std::optional<CameraModel>& cam, ImageSize image)
{
    try
    {
        if (cam)
        {
            cam->validate();
            return *cam;
        }
        return default_camera(image.width, image.height);
    }
    catch (const InvalidDimensions& e)
    {
        throw ConfigError(e.what());
    }
}

} // namespace drowsy::detail
