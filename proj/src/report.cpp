#include <loopflux/report.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>

namespace loopflux {

double report_num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return std::strtod(buf, nullptr);
}

Json report_root(const std::string& kind) {
  Json j;
  j["schema"] = 1;
  j["kind"] = kind;
  return j;
}

std::string render(const Json& j) { return j.dump(2) + "\n"; }

std::string csv_num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string csv_render(const std::vector<std::string>& header,
                       const std::vector<std::vector<std::string>>& rows) {
  std::string out;
  auto line = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
  return out;
}

bool write_text(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::cout << text;
    return bool(std::cout);
  }
  std::ofstream f(path, std::ios::binary);
  f << text;
  return bool(f);
}

}  // namespace loopflux
