#include "memesent/image_io.hpp"

#include <cctype>
#include <fstream>
#include <sstream>
#include <string>

namespace memesent {

namespace {

class PnmCursor {
 public:
  explicit PnmCursor(std::string_view s) : s_(s) {}

  void skip_space_and_comments() {
    while (pos_ < s_.size()) {
      if (std::isspace(static_cast<unsigned char>(s_[pos_]))) {
        ++pos_;
      } else if (s_[pos_] == '#') {
        while (pos_ < s_.size() && s_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  int integer(const char* what) {
    skip_space_and_comments();
    std::size_t start = pos_;
    long v = 0;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
      v = v * 10 + (s_[pos_] - '0');
      if (v > 1 << 24) throw InputError(std::string("pnm: ") + what + " too large");
      ++pos_;
    }
    if (pos_ == start) throw InputError(std::string("pnm: expected ") + what);
    return static_cast<int>(v);
  }

  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace

RawImage parse_pnm(std::string_view bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P') throw InputError("pnm: missing magic number");
  const char kind = bytes[1];
  if (kind != '2' && kind != '3' && kind != '5' && kind != '6') {
    throw InputError(std::string("pnm: unsupported format P") + kind);
  }
  PnmCursor cur(bytes);
  cur.advance(2);
  RawImage img;
  img.width = cur.integer("width");
  img.height = cur.integer("height");
  const int maxval = cur.integer("maxval");
  if (img.width < 1 || img.height < 1) throw InputError("pnm: empty image");
  if (maxval < 1 || maxval > 255) throw InputError("pnm: only 8-bit images are supported");
  img.channels = (kind == '3' || kind == '6') ? 3 : 1;
  const std::size_t n = static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height) *
                        static_cast<std::size_t>(img.channels);
  img.data.resize(n);
  const auto scale = [maxval](int v) {
    if (v > maxval) throw InputError("pnm: sample exceeds maxval");
    return static_cast<std::uint8_t>((v * 255 + maxval / 2) / maxval);
  };
  if (kind == '2' || kind == '3') {
    for (std::size_t i = 0; i < n; ++i) img.data[i] = scale(cur.integer("sample"));
  } else {
    cur.advance(1);  // single whitespace after maxval
    if (bytes.size() < cur.pos() + n) throw InputError("pnm: truncated pixel data");
    for (std::size_t i = 0; i < n; ++i) img.data[i] = scale(static_cast<unsigned char>(bytes[cur.pos() + i]));
  }
  return img;
}

RawImage read_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open image '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_pnm(ss.str());
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

void write_pnm(const std::filesystem::path& path, const RawImage& image) {
  if (image.channels != 1 && image.channels != 3) throw InputError("write_pnm: 1 or 3 channels required");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write image '" + path.string() + "'");
  out << (image.channels == 3 ? "P6" : "P5") << '\n' << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.data.data()), static_cast<std::streamsize>(image.data.size()));
}

}  // namespace memesent
