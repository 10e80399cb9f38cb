#include <doctest.h>

TEST_SUITE("error_lab") {}
