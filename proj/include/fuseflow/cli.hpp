#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "fuseflow/depth_frame.hpp"

namespace fuseflow::cli {

// Exit codes shared by every subcommand.
enum ExitCode : int { kOk = 0, kUsage = 1, kIo = 2, kValidation = 3 };

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int main(int argc, char** argv);

// Frame directories: <root>/<index, zero-padded to 6>/cam<id>.{pgm,raw};
// a root holding cam*.pgm directly is a single frame 0.
std::filesystem::path frame_dir(const std::filesystem::path& root, int frame);
std::map<int, std::filesystem::path> list_frames(const std::filesystem::path& root);
std::vector<DepthFrame> load_frame_set(const std::filesystem::path& dir);

}  // namespace fuseflow::cli
