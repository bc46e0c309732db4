#include "infusion/data_io.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace infusion {

namespace {
constexpr double kLogTwoPi = 1.8378770664093453;
constexpr std::size_t kMaxIdxElements = 1u << 30;  // refuse absurd headers before allocating
}  // namespace

Tensor Dataset::rows_for(SplitLabel label) const {
  if (split_labels.size() != size()) {
    throw std::logic_error("Dataset::rows_for: dataset has not been split");
  }
  const std::size_t d = dim();
  std::size_t count = 0;
  for (std::uint8_t l : split_labels) {
    if (l == static_cast<std::uint8_t>(label)) ++count;
  }
  Tensor out({count, d});
  std::size_t w = 0;
  for (std::size_t r = 0; r < size(); ++r) {
    if (split_labels[r] == static_cast<std::uint8_t>(label)) {
      for (std::size_t c = 0; c < d; ++c) out.at(w, c) = rows.at(r, c);
      ++w;
    }
  }
  return out;
}

IdxTensor load_idx(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("load_idx: cannot open " + path.string());
  std::uint8_t header[4];
  if (!f.read(reinterpret_cast<char*>(header), 4)) throw std::runtime_error("load_idx: truncated header");
  if (header[0] != 0 || header[1] != 0) throw std::runtime_error("load_idx: bad magic (leading bytes nonzero)");
  if (header[2] != 0x08) {
    throw std::runtime_error("load_idx: unsupported element type 0x" + std::to_string(header[2]) +
                             " (only u8 / 0x08)");
  }
  const std::size_t rank = header[3];
  if (rank == 0 || rank > 8) throw std::runtime_error("load_idx: bad rank " + std::to_string(rank));
  IdxTensor out;
  std::size_t numel = 1;
  for (std::size_t i = 0; i < rank; ++i) {
    std::uint8_t b[4];
    if (!f.read(reinterpret_cast<char*>(b), 4)) throw std::runtime_error("load_idx: truncated dimension header");
    const std::size_t dim = (std::size_t(b[0]) << 24) | (std::size_t(b[1]) << 16) | (std::size_t(b[2]) << 8) |
                            std::size_t(b[3]);
    if (dim == 0) throw std::runtime_error("load_idx: zero dimension");
    if (numel > kMaxIdxElements / dim) throw std::runtime_error("load_idx: declared size too large");
    numel *= dim;
    out.dims.push_back(dim);
  }
  out.data.resize(numel);
  if (!f.read(reinterpret_cast<char*>(out.data.data()), static_cast<std::streamsize>(numel))) {
    throw std::runtime_error("load_idx: payload shorter than declared dimensions");
  }
  char extra;
  if (f.read(&extra, 1)) throw std::runtime_error("load_idx: trailing bytes after payload");
  return out;
}

void write_idx(const std::filesystem::path& path, const IdxTensor& t) {
  const std::size_t numel = std::accumulate(t.dims.begin(), t.dims.end(), std::size_t(1), std::multiplies<>());
  if (numel != t.data.size()) throw std::invalid_argument("write_idx: dims do not match payload size");
  if (t.dims.empty() || t.dims.size() > 8) throw std::invalid_argument("write_idx: bad rank");
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("write_idx: cannot open " + path.string());
  const std::uint8_t header[4] = {0, 0, 0x08, static_cast<std::uint8_t>(t.dims.size())};
  f.write(reinterpret_cast<const char*>(header), 4);
  for (std::size_t dim : t.dims) {
    const std::uint8_t b[4] = {static_cast<std::uint8_t>(dim >> 24), static_cast<std::uint8_t>(dim >> 16),
                               static_cast<std::uint8_t>(dim >> 8), static_cast<std::uint8_t>(dim)};
    f.write(reinterpret_cast<const char*>(b), 4);
  }
  f.write(reinterpret_cast<const char*>(t.data.data()), static_cast<std::streamsize>(t.data.size()));
  if (!f) throw std::runtime_error("write_idx: write failed for " + path.string());
}

Tensor scale_unit(const IdxTensor& raw) {
  if (raw.dims.size() < 2) throw std::invalid_argument("scale_unit: need rank >= 2 (items x pixels)");
  const std::size_t n = raw.dims[0];
  std::size_t d = 1;
  for (std::size_t i = 1; i < raw.dims.size(); ++i) d *= raw.dims[i];
  Tensor out({n, d});
  for (std::size_t i = 0; i < n * d; ++i) out[i] = static_cast<double>(raw.data[i]) / 255.0;
  return out;
}

Dataset toy_two_gaussians(Rng& rng, std::size_t n, const std::array<std::array<double, 2>, 2>& centers,
                          double stddev) {
  if (!(stddev > 0.0)) throw std::invalid_argument("toy_two_gaussians: stddev must be > 0");
  Dataset ds;
  ds.rows = Tensor({n, 2});
  for (std::size_t r = 0; r < n; ++r) {
    while (true) {
      const std::size_t which = rng.uniform() < 0.5 ? 0 : 1;
      const double x = centers[which][0] + stddev * rng.normal();
      const double y = centers[which][1] + stddev * rng.normal();
      if (x >= 0.0 && x <= 1.0 && y >= 0.0 && y <= 1.0) {
        ds.rows.at(r, 0) = x;
        ds.rows.at(r, 1) = y;
        break;
      }
    }
  }
  ds.provenance = "toy_two_gaussians";
  const double s2 = stddev * stddev;
  ds.analytic_log_density = [centers, s2](std::span<const double> p) {
    const double norm = -(kLogTwoPi + std::log(s2));  // isotropic, d=2
    double terms[2];
    for (std::size_t k = 0; k < 2; ++k) {
      const double dx = p[0] - centers[k][0];
      const double dy = p[1] - centers[k][1];
      terms[k] = std::log(0.5) + norm - (dx * dx + dy * dy) / (2.0 * s2);
    }
    const double m = terms[0] > terms[1] ? terms[0] : terms[1];
    return m + std::log(std::exp(terms[0] - m) + std::exp(terms[1] - m));
  };
  return ds;
}

Dataset split_dataset(Dataset ds, const std::array<double, 3>& fractions, std::uint64_t seed) {
  double total = 0.0;
  for (double f : fractions) {
    if (f < 0.0) throw std::invalid_argument("split_dataset: negative fraction");
    total += f;
  }
  if (std::fabs(total - 1.0) > 1e-9) throw std::invalid_argument("split_dataset: fractions must sum to 1");
  const std::size_t n = ds.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(i));
    if (j >= i) j = i - 1;
    std::swap(order[i - 1], order[j]);
  }
  const std::size_t n_train = static_cast<std::size_t>(std::floor(fractions[0] * static_cast<double>(n)));
  const std::size_t n_valid = static_cast<std::size_t>(std::floor(fractions[1] * static_cast<double>(n)));
  ds.split_labels.assign(n, static_cast<std::uint8_t>(SplitLabel::Test));
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t label = i < n_train                ? static_cast<std::uint8_t>(SplitLabel::Train)
                               : i < n_train + n_valid    ? static_cast<std::uint8_t>(SplitLabel::Valid)
                                                          : static_cast<std::uint8_t>(SplitLabel::Test);
    ds.split_labels[order[i]] = label;
  }
  return ds;
}

Tensor downsample_box(const Tensor& rows, std::size_t in_h, std::size_t in_w, std::size_t out_h, std::size_t out_w) {
  const std::size_t n = rows.rows();
  if (rows.cols() != in_h * in_w) throw std::invalid_argument("downsample_box: row width != in_h*in_w");
  Tensor out({n, out_h * out_w});
  const double sy = static_cast<double>(in_h) / static_cast<double>(out_h);
  const double sx = static_cast<double>(in_w) / static_cast<double>(out_w);
  for (std::size_t r = 0; r < n; ++r) {
    const double* src = rows.data() + r * in_h * in_w;
    for (std::size_t oy = 0; oy < out_h; ++oy) {
      const double y0 = oy * sy, y1 = (oy + 1) * sy;
      for (std::size_t ox = 0; ox < out_w; ++ox) {
        const double x0 = ox * sx, x1 = (ox + 1) * sx;
        double acc = 0.0;
        for (std::size_t iy = static_cast<std::size_t>(y0); iy < in_h && iy < y1; ++iy) {
          const double wy = std::min<double>(iy + 1, y1) - std::max<double>(iy, y0);
          if (wy <= 0.0) continue;
          for (std::size_t ix = static_cast<std::size_t>(x0); ix < in_w && ix < x1; ++ix) {
            const double wx = std::min<double>(ix + 1, x1) - std::max<double>(ix, x0);
            if (wx <= 0.0) continue;
            acc += wy * wx * src[iy * in_w + ix];
          }
        }
        out.at(r, oy * out_w + ox) = acc / (sy * sx);
      }
    }
  }
  return out;
}

void write_grid(const Tensor& images, std::size_t grid_rows, std::size_t grid_cols, std::size_t image_rows,
                std::size_t image_cols, const std::filesystem::path& path) {
  const std::size_t m = images.rows();
  if (m != grid_rows * grid_cols) {
    throw std::invalid_argument("write_grid: image count " + std::to_string(m) + " != grid " +
                                std::to_string(grid_rows) + "x" + std::to_string(grid_cols));
  }
  if (images.cols() != image_rows * image_cols) {
    throw std::invalid_argument("write_grid: row width != image_rows*image_cols");
  }
  const std::size_t H = grid_rows * image_rows, W = grid_cols * image_cols;
  std::vector<std::uint8_t> pixels(H * W, 0);
  for (std::size_t g = 0; g < m; ++g) {
    const std::size_t gy = (g / grid_cols) * image_rows;
    const std::size_t gx = (g % grid_cols) * image_cols;
    const double* src = images.data() + g * image_rows * image_cols;
    for (std::size_t y = 0; y < image_rows; ++y) {
      for (std::size_t x = 0; x < image_cols; ++x) {
        double v = src[y * image_cols + x];
        v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
        pixels[(gy + y) * W + gx + x] = static_cast<std::uint8_t>(std::floor(255.0 * v + 0.5));
      }
    }
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("write_grid: cannot open " + path.string());
  f << "P5\n" << W << " " << H << "\n255\n";
  f.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
  if (!f) throw std::runtime_error("write_grid: write failed for " + path.string());
}

}  // namespace infusion
