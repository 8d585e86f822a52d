#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gradcheck_cases.hpp"

TEST_CASE("tape gradients match central differences") {
  for (const auto& c : gradcheck::all_cases()) {
    const auto r = c.run();
    INFO(c.name << ", worst: " << r.worst);
    CHECK(r.checked > 0);
    CHECK(r.max_rel_error < 1e-3);
  }
}
