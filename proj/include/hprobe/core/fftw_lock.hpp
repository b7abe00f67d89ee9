#pragma once

#include <mutex>

namespace hprobe {

// FFTW planning is not thread-safe; every plan create/destroy holds this lock.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace hprobe
