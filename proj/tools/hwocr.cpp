#include "hwocr/cli.hpp"

int main(int argc, char** argv) { return hwocr::cli::dispatch(argc, argv); }
