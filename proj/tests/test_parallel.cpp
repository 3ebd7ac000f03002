#include <gtest/gtest.h>

#include <stdexcept>
#include <vector>

#include "rwsre/parallel.hpp"
#include "rwsre/random.hpp"

using namespace rwsre;

TEST(Parallel, ResultsIndependentOfWorkers) {
  auto run = [](unsigned w) {
    std::vector<std::uint64_t> out(257);
    parallel_for(out.size(), w, [&](std::size_t i) {
      Stream s(1, i, 0, Purpose::generic);
      std::uint64_t acc = 0;
      for (int k = 0; k < 100; ++k) acc ^= s.next();
      out[i] = acc;
    });
    return out;
  };
  const auto one = run(1);
  EXPECT_EQ(one, run(2));
  EXPECT_EQ(one, run(7));
}

TEST(Parallel, RethrowsLowestFailingIndex) {
  try {
    parallel_for(100, 4, [](std::size_t i) {
      if (i == 17 || i == 60) throw std::runtime_error(std::to_string(i));
    });
    FAIL() << "no exception";
  } catch (const std::runtime_error& e) {
    EXPECT_STREQ(e.what(), "17");
  }
}

TEST(Parallel, EmptyRange) {
  int calls = 0;
  parallel_for(0, 4, [&](std::size_t) { ++calls; });
  EXPECT_EQ(calls, 0);
}
