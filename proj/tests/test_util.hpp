#pragma once

#include <doctest.h>

#include "mildmix/errors.hpp"

namespace mildmix::testing {

template <class Fn>
ErrorKind kind_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an Error");
  return ErrorKind::file_io;
}

}  // namespace mildmix::testing
