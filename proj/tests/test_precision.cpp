#include <doctest.h>

TEST_SUITE("precision") {}
