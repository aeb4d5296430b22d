#include "hazreg/commands.hpp"

int main(int argc, char** argv) { return hazreg::run_cli(argc, argv); }
