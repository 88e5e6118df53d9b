#include "brownlab/cli.hpp"

int main(int argc, char** argv) { return brownlab::dispatch(argc, argv); }
