#include <gtest/gtest.h>

#include "wabd/views.hpp"

using namespace wabd;

TEST(Views, SuccIncrementsIndex) {
  EXPECT_EQ(succ(kInitialView), ViewId{1});
  EXPECT_EQ(succ(ViewId{3}), ViewId{4});
  EXPECT_EQ(succ(succ(kInitialView)), ViewId{2});
}

TEST(Views, PredIsUndefinedForInitialView) {
  EXPECT_THROW(pred(kInitialView), std::domain_error);
  EXPECT_EQ(pred(ViewId{5}), ViewId{4});
  EXPECT_EQ(pred(succ(ViewId{7})), ViewId{7});
}

TEST(Views, MoreUpToDateExamples) {
  EXPECT_TRUE(more_up_to_date(ViewId{0}, ViewId{2}));
  EXPECT_FALSE(more_up_to_date(ViewId{2}, ViewId{2}));
  EXPECT_FALSE(more_up_to_date(ViewId{3}, ViewId{1}));
}

TEST(Views, MoreUpToDateTerminatesAtSequenceBound) {
  EXPECT_FALSE(more_up_to_date(ViewId{kMaxViewIndex}, ViewId{kMaxViewIndex + 5}));
  EXPECT_TRUE(more_up_to_date(ViewId{kMaxViewIndex - 2}, ViewId{kMaxViewIndex}));
}

TEST(Views, OrderPropertiesExhaustive) {
  constexpr std::uint32_t kMax = 20;
  for (std::uint32_t a = 0; a <= kMax; ++a) {
    for (std::uint32_t b = 0; b <= kMax; ++b) {
      const ViewId v{a}, w{b};
      EXPECT_EQ(more_up_to_date(v, w), a < b) << a << " " << b;
      if (a != b) {
        EXPECT_NE(more_up_to_date(v, w), more_up_to_date(w, v)) << a << " " << b;
      }
      for (std::uint32_t c = 0; c <= kMax; ++c) {
        const ViewId x{c};
        if (more_up_to_date(v, w) && more_up_to_date(w, x)) {
          EXPECT_TRUE(more_up_to_date(v, x));
        }
      }
    }
  }
}

static_assert(more_up_to_date(ViewId{1}, ViewId{2}));
static_assert(!more_up_to_date(ViewId{2}, ViewId{1}));
