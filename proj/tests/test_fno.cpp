#include <doctest.h>

TEST_SUITE("fno") {}
