#include <doctest.h>

TEST_SUITE("contract") {}
