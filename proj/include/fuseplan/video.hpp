// Dense pixel volumes and the raw FPVD frame file format.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fuseplan/types.hpp"

namespace fuseplan {

enum class ElemType : std::uint32_t { U8 = 0, F32 = 1 };

// Elements live as float in memory regardless of file element type; U8
// volumes carry integral values in [0, 255].
struct VideoData {
  VideoDims dims;
  ElemType elem_type = ElemType::F32;
  std::vector<float> data;  // [frame][channel][y][x] planar

  static VideoData zeros(const VideoDims& dims,
                         ElemType elem_type = ElemType::F32);

  std::size_t index(int x, int y, int t, int c) const {
    return ((std::size_t(t) * dims.channels + c) * dims.height + y) *
               dims.width +
           x;
  }
  float at(int x, int y, int t, int c) const { return data[index(x, y, t, c)]; }
  float& at(int x, int y, int t, int c) { return data[index(x, y, t, c)]; }

  // Clamp-to-edge sampling for out-of-range coordinates.
  float sample(int x, int y, int t, int c) const;
};

void write_video_file(const std::string& path, const VideoData& video);
VideoData read_video_file(const std::string& path);

std::string encode_video(const VideoData& video);
VideoData decode_video(const std::string& bytes);

}  // namespace fuseplan
