#pragma once

// Minimal XML well-formedness check for the generated SVG: balanced,
// properly nested elements, quoted attributes, known entities only.

#include <cstddef>
#include <string>
#include <vector>

namespace xmlcheck {

inline bool well_formed(const std::string& s) {
  std::vector<std::string> stack;
  std::size_t i = 0, roots = 0;
  while (i < s.size()) {
    if (s[i] == '&') {
      auto end = s.find(';', i);
      if (end == std::string::npos) return false;
      const auto ent = s.substr(i, end - i + 1);
      if (ent != "&amp;" && ent != "&lt;" && ent != "&gt;" && ent != "&quot;" && ent != "&apos;") return false;
      i = end + 1;
      continue;
    }
    if (s[i] != '<') {
      if (s[i] == '>') return false;
      if (stack.empty() && !std::isspace(static_cast<unsigned char>(s[i]))) return false;
      ++i;
      continue;
    }
    if (s.compare(i, 2, "<?") == 0) {
      auto end = s.find("?>", i);
      if (end == std::string::npos) return false;
      i = end + 2;
      continue;
    }
    auto end = i + 1;
    char quote = 0;
    while (end < s.size() && (quote || s[end] != '>')) {
      if (quote && s[end] == quote) quote = 0;
      else if (!quote && (s[end] == '"' || s[end] == '\'')) quote = s[end];
      else if (!quote && s[end] == '<') return false;
      ++end;
    }
    if (end >= s.size()) return false;
    std::string tag = s.substr(i + 1, end - i - 1);
    i = end + 1;
    if (!tag.empty() && tag[0] == '/') {
      if (stack.empty() || stack.back() != tag.substr(1)) return false;
      stack.pop_back();
      continue;
    }
    const bool self_closing = !tag.empty() && tag.back() == '/';
    const std::string name = tag.substr(0, tag.find_first_of(" \t\n/"));
    if (name.empty()) return false;
    if (stack.empty() && ++roots > 1) return false;
    if (!self_closing) stack.push_back(name);
  }
  return stack.empty() && roots == 1;
}

inline std::size_t count(const std::string& s, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = s.find(needle); pos != std::string::npos; pos = s.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace xmlcheck
