#include "pinntk/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

#include "pinntk/errors.hpp"

namespace pinntk {

std::string format_full(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw IoError("cannot create directory " + dir.string() + ": " +
                  ec.message());
  }
}

namespace {

void write_stream_or_throw(const std::filesystem::path& path,
                           const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot open " + path.string() + " for writing");
  }
  out << content;
  out.flush();
  if (!out) {
    throw IoError("write to " + path.string() + " failed");
  }
}

}  // namespace

void write_csv(const std::filesystem::path& path,
               const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::ostringstream body;
  for (size_t i = 0; i < header.size(); ++i) {
    if (i) body << ',';
    body << header[i];
  }
  body << '\n';
  for (const auto& row : rows) {
    for (size_t i = 0; i < row.size(); ++i) {
      if (i) body << ',';
      body << row[i];
    }
    body << '\n';
  }
  write_stream_or_throw(path, body.str());
}

void write_text_file(const std::filesystem::path& path,
                     const std::string& content) {
  write_stream_or_throw(path, content);
}

std::string spectrum_svg(
    const std::vector<std::pair<std::string, Eigen::VectorXd>>& curves) {
  const double width = 640.0, height = 420.0;
  const double ml = 70.0, mr = 20.0, mt = 30.0, mb = 40.0;
  const double clip = 1e-18;

  Eigen::Index max_len = 1;
  double lo = 0.0, hi = 0.0;
  bool any = false;
  for (const auto& [label, v] : curves) {
    max_len = std::max(max_len, v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      const double y = std::log10(std::max(v[i], clip));
      if (!any) {
        lo = hi = y;
        any = true;
      } else {
        lo = std::min(lo, y);
        hi = std::max(hi, y);
      }
    }
  }
  if (!any) lo = -1.0, hi = 1.0;
  if (hi - lo < 1e-12) hi = lo + 1.0;

  auto px = [&](double j) {
    return ml + (width - ml - mr) * (max_len > 1 ? j / double(max_len - 1)
                                                 : 0.5);
  };
  auto py = [&](double logv) {
    return mt + (height - mt - mb) * (hi - logv) / (hi - lo);
  };

  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                  "#9467bd", "#ff7f0e", "#8c564b"};
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " "
      << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  // axes
  svg << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml
      << "\" y2=\"" << height - mb << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << ml << "\" y1=\"" << height - mb << "\" x2=\""
      << width - mr << "\" y2=\"" << height - mb << "\" stroke=\"black\"/>\n";
  svg << "<text x=\"" << ml - 8 << "\" y=\"" << mt + 4
      << "\" text-anchor=\"end\" font-size=\"12\">1e" << int(std::round(hi))
      << "</text>\n";
  svg << "<text x=\"" << ml - 8 << "\" y=\"" << height - mb + 4
      << "\" text-anchor=\"end\" font-size=\"12\">1e" << int(std::round(lo))
      << "</text>\n";
  svg << "<text x=\"" << (ml + width - mr) / 2 << "\" y=\"" << height - 10
      << "\" text-anchor=\"middle\" font-size=\"12\">eigenvalue index"
      << "</text>\n";

  int ci = 0;
  for (const auto& [label, v] : curves) {
    const char* color = palette[ci % 6];
    svg << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\" points=\"";
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      if (i) svg << ' ';
      svg << px(double(i)) << ',' << py(std::log10(std::max(v[i], clip)));
    }
    svg << "\"/>\n";
    svg << "<text x=\"" << width - mr - 4 << "\" y=\"" << mt + 16 * (ci + 1)
        << "\" text-anchor=\"end\" font-size=\"12\" fill=\"" << color << "\">"
        << label << "</text>\n";
    ++ci;
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace pinntk
