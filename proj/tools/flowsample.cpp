#include "flowsample/cli.hpp"

int main(int argc, char** argv) { return flowsample::run_cli(argc, argv); }
