#pragma once

#define RESUNET_VERSION "0.1.0"
#define RESUNET_CHECKPOINT_VERSION 1
