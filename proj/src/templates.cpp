#include <map>
#include <stdexcept>
#include <string>

#include <fmt/format.h>

#include "sode/protocol.hpp"

namespace sode {

namespace detail {
const std::map<std::string, std::string, std::less<>>& template_table();
}

const std::string& prompt_template(std::string_view name) {
  const auto& table = detail::template_table();
  auto it = table.find(name);
  if (it == table.end()) throw std::out_of_range(fmt::format("no prompt template \"{}\"", name));
  return it->second;
}

std::string fill_template(std::string_view text,
                          const std::map<std::string, std::string, std::less<>>& vars) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '{') {
      const auto close = text.find('}', i + 1);
      if (close != std::string_view::npos) {
        auto it = vars.find(text.substr(i + 1, close - i - 1));
        if (it != vars.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out += text[i++];
  }
  return out;
}

}  // namespace sode
