#pragma once

#include <array>
#include <cstdint>
#include <string>

namespace crossrank {

// User groups by profile length (number of training ratings in the dataset).
enum class ProfileGroup : int { Short = 0, QuiteShort = 1, QuiteLong = 2, Long = 3 };

inline constexpr int kNumProfileGroups = 4;

inline ProfileGroup assign_group(int64_t profile_length) {
  if (profile_length < 5) return ProfileGroup::Short;
  if (profile_length < 8) return ProfileGroup::QuiteShort;
  if (profile_length < 12) return ProfileGroup::QuiteLong;
  return ProfileGroup::Long;
}

inline const char* profile_group_name(ProfileGroup g) {
  switch (g) {
    case ProfileGroup::Short: return "short";
    case ProfileGroup::QuiteShort: return "quite_short";
    case ProfileGroup::QuiteLong: return "quite_long";
    case ProfileGroup::Long: return "long";
  }
  return "?";
}

}  // namespace crossrank
