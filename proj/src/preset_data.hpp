#ifndef DHASH_PRESET_DATA_HPP
#define DHASH_PRESET_DATA_HPP

#include <string_view>
#include <vector>

namespace dhash::detail {

struct PresetFile {
  std::string_view name;
  std::string_view text;
};

/// Contents of presets/*.conf, compiled in at build time.
const std::vector<PresetFile>& embedded_presets();

}  // namespace dhash::detail

#endif  // DHASH_PRESET_DATA_HPP
