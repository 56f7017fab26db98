#ifndef DISPCAST_FORMAT_HPP_
#define DISPCAST_FORMAT_HPP_

#include <cstdio>
#include <string>
#include <string_view>

namespace dispcast {

// 17 significant digits: enough for a double to round-trip exactly.
inline std::string str17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

// Short human form for labels (qape_0.99, thresholds in messages).
inline std::string strg(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%g", x);
  return buf;
}

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r'))
    --e;
  return std::string(s.substr(b, e - b));
}

inline std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    if (c >= 'A' && c <= 'Z') c += 'a' - 'A';
  return out;
}

}  // namespace dispcast

#endif  // DISPCAST_FORMAT_HPP_
