#ifndef _TCP_H
#define _TCP_H

#include <linux/types.h>
#include <net/sock.h>

#define TCP_SYN_SENT 2
#define TCP_ESTABLISHED 1

struct tcp_sock {
	u32 rcv_nxt;
	u32 rcv_wnd;
	u32 snd_nxt;
	u32 write_seq;
	int state;
	u16 sport;
	u16 dport;
	__be32 saddr;
	__be32 daddr;
};

struct tcphdr {
	u16 source;
	u16 dest;
	u32 seq;
	u32 ack_seq;
	u8 syn;
	u8 ack;
	u8 rst;
};

u32 secure_tcp_seq(__be32 saddr, __be32 daddr, __be16 sport, __be16 dport);
void tcp_send_challenge_ack(struct tcp_sock *tp);

/* True when seq1 comes before seq2 in sequence space. */
static inline bool before(u32 seq1, u32 seq2)
{
	return (int)(seq1 - seq2) < 0;
}

#endif
