#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "synse/alignment.hpp"

namespace synse {

// Line chart of total, VAE and cross-modal loss per epoch, as standalone SVG.
std::string render_loss_svg(const std::vector<EpochRecord>& trajectory);
void write_loss_plot(const std::vector<EpochRecord>& trajectory, const std::filesystem::path& path);

}  // namespace synse
