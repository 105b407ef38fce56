#include "fuseplan/video.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

namespace fuseplan {

namespace {

constexpr char kMagic[4] = {'F', 'P', 'V', 'D'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  char b[4];
  std::memcpy(b, &v, 4);  // little-endian hosts only
  out.append(b, 4);
}

std::uint32_t get_u32(const std::string& in, std::size_t& pos) {
  require(pos + 4 <= in.size(), ErrorKind::Input, "video file truncated");
  std::uint32_t v;
  std::memcpy(&v, in.data() + pos, 4);
  pos += 4;
  return v;
}

}  // namespace

VideoData VideoData::zeros(const VideoDims& dims, ElemType elem_type) {
  dims.validate();
  VideoData v;
  v.dims = dims;
  v.elem_type = elem_type;
  v.data.assign(std::size_t(dims.element_count()), 0.0f);
  return v;
}

float VideoData::sample(int x, int y, int t, int c) const {
  x = std::clamp(x, 0, dims.width - 1);
  y = std::clamp(y, 0, dims.height - 1);
  t = std::clamp(t, 0, dims.frames - 1);
  return at(x, y, t, c);
}

std::string encode_video(const VideoData& video) {
  std::string out;
  out.append(kMagic, 4);
  put_u32(out, kVersion);
  put_u32(out, std::uint32_t(video.dims.width));
  put_u32(out, std::uint32_t(video.dims.height));
  put_u32(out, std::uint32_t(video.dims.frames));
  put_u32(out, std::uint32_t(video.dims.channels));
  put_u32(out, std::uint32_t(video.elem_type));
  if (video.elem_type == ElemType::U8) {
    for (float f : video.data)
      out.push_back(char(std::uint8_t(std::clamp(f, 0.0f, 255.0f))));
  } else {
    out.append(reinterpret_cast<const char*>(video.data.data()),
               video.data.size() * sizeof(float));
  }
  return out;
}

VideoData decode_video(const std::string& bytes) {
  require(bytes.size() >= 4 && std::memcmp(bytes.data(), kMagic, 4) == 0,
          ErrorKind::Input, "not an FPVD video file");
  std::size_t pos = 4;
  std::uint32_t version = get_u32(bytes, pos);
  require(version == kVersion, ErrorKind::Input, "unsupported FPVD version");
  VideoData v;
  v.dims.width = int(get_u32(bytes, pos));
  v.dims.height = int(get_u32(bytes, pos));
  v.dims.frames = int(get_u32(bytes, pos));
  v.dims.channels = int(get_u32(bytes, pos));
  v.dims.fps = 1;  // not carried by the file format
  std::uint32_t et = get_u32(bytes, pos);
  require(et <= 1, ErrorKind::Input, "unknown FPVD element type");
  v.elem_type = ElemType(et);
  v.dims.validate();
  std::size_t count = std::size_t(v.dims.element_count());
  v.data.resize(count);
  if (v.elem_type == ElemType::U8) {
    require(bytes.size() == pos + count, ErrorKind::Input,
            "video payload size mismatch");
    for (std::size_t i = 0; i < count; ++i)
      v.data[i] = float(std::uint8_t(bytes[pos + i]));
  } else {
    require(bytes.size() == pos + count * sizeof(float), ErrorKind::Input,
            "video payload size mismatch");
    std::memcpy(v.data.data(), bytes.data() + pos, count * sizeof(float));
  }
  return v;
}

void write_video_file(const std::string& path, const VideoData& video) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorKind::Input, "cannot write video file: " + path);
  std::string bytes = encode_video(video);
  out.write(bytes.data(), std::streamsize(bytes.size()));
}

VideoData read_video_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::Input, "cannot open video file: " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  return decode_video(bytes);
}

}  // namespace fuseplan
