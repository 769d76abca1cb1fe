#include "gaze_attn_app/cli.hpp"

int main(int argc, char** argv) { return gaze_attn::app::run_cli(argc, argv); }
