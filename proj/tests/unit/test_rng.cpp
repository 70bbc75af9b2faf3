#include "doctest.h"

#include <array>

#include "affectsim/errors.hpp"
#include "affectsim/rng.hpp"

using affectsim::Rng;

TEST_CASE("same seed gives the same stream") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
}

TEST_CASE("derived streams differ from each other and from the base seed") {
    Rng base(7), s1 = Rng::derive(7, 1), s2 = Rng::derive(7, 2);
    const auto x = base.next(), y = s1.next(), z = s2.next();
    CHECK(x != y);
    CHECK(y != z);
    CHECK(Rng::derive(7, 1).next() == y);
}

TEST_CASE("uniform stays in [0,1) and index in range") {
    Rng r(3);
    for (int i = 0; i < 10000; ++i) {
        const double u = r.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        CHECK(r.index(7) < 7u);
    }
    CHECK_THROWS_AS(r.index(0), affectsim::UsageError);
}

TEST_CASE("index is close to uniform") {
    Rng r(11);
    std::array<int, 5> counts{};
    const int n = 50000;
    for (int i = 0; i < n; ++i) ++counts[r.index(5)];
    double chi2 = 0;
    for (int c : counts) chi2 += (c - n / 5.0) * (c - n / 5.0) / (n / 5.0);
    CHECK(chi2 < 18.47);  // chi-square 4 dof, p = 0.001
}

TEST_CASE("serialized state resumes the stream") {
    Rng r(99);
    for (int i = 0; i < 17; ++i) r.next();
    Rng copy = Rng::deserialize(r.serialize());
    CHECK(copy == r);
    CHECK(copy.next() == r.next());
}
