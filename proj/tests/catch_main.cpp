// Builds the amalgamated Catch2 translation unit (provides main).
#include <catch2/catch_amalgamated.cpp>
