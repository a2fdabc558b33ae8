// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <algorithm>
#include <filesystem>
#include <string>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "scenecat/error.hpp"
#include "scenecat/imaging.hpp"

namespace scenecat {

// Decodes a PNG/JPEG file into an RGB raster.
inline RgbImage load_rgb(const std::filesystem::path& path) {
  cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (bgr.empty()) throw InputError("cannot decode image: " + path.string());
  RgbImage out;
  out.width = bgr.cols;
  out.height = bgr.rows;
  out.rgb.resize(static_cast<std::size_t>(out.width) * out.height * 3);
  std::size_t k = 0;
  for (int y = 0; y < bgr.rows; ++y) {
    const auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < bgr.cols; ++x) {
      out.rgb[k++] = row[x][2];
      out.rgb[k++] = row[x][1];
      out.rgb[k++] = row[x][0];
    }
  }
  return out;
}

inline GrayImage load_gray(const std::filesystem::path& path) { return to_grayscale(load_rgb(path)); }

// Writes an 8-bit grayscale PNG (intensities rounded and clamped).
inline void save_gray_png(const GrayImage& img, const std::filesystem::path& path) {
  cv::Mat m(img.height, img.width, CV_8UC1);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      m.at<unsigned char>(y, x) =
          static_cast<unsigned char>(std::clamp(std::lround(img.at(x, y)), 0L, 255L));
  if (!cv::imwrite(path.string(), m)) throw InputError("cannot write image: " + path.string());
}

// Image files (.png/.jpg/.jpeg, case-insensitive) in a directory, sorted by name.
inline std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw InputError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace scenecat
