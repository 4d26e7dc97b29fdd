#pragma once

#ifndef LOWENV_VERSION
#define LOWENV_VERSION "0.1.0"
#endif

namespace lowenv {

inline constexpr const char* kVersion = LOWENV_VERSION;

}  // namespace lowenv
