package com.example.app03;

public class Store {
    private String name = "item 103";

    public String label(int count) {
        String prefix = name.toUpperCase();
        return prefix + ":" + (count + 103);
    }

    public int total(int[] values) {
        int sum = 0;
        for (int v : values) {
            sum += v;
        }
        return sum;
    }
}
